//! Nightlight raster ingestion and aggregation onto the coarse node lattice.
//!
//! Rasters use the ESRI ASCII-grid layout (top row northernmost). A coarse
//! grid is a uniform partition of a bounding box in degree space; every
//! pixel whose center falls inside a cell contributes to that cell's total
//! intensity `I`, and the cell's log-intensity is `M = log(I + 1)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::real;

/// Axis-aligned region in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Result<Self> {
        let b = BBox { min_lon, min_lat, max_lon, max_lat };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.min_lon, self.min_lat, self.max_lon, self.max_lat].iter().all(|v| v.is_finite());
        if !all_finite || self.min_lon >= self.max_lon || self.min_lat >= self.max_lat {
            return Err(Error::validation(format!("bounding box must satisfy min < max on both axes, got {:?}", self)));
        }
        Ok(())
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.min_lon && lon <= self.max_lon && lat >= self.min_lat && lat <= self.max_lat
    }

    /// Positive-area overlap.
    pub fn overlaps(&self, other: &BBox) -> bool {
        self.min_lon < other.max_lon
            && other.min_lon < self.max_lon
            && self.min_lat < other.max_lat
            && other.min_lat < self.max_lat
    }

    pub fn width(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height(&self) -> f64 {
        self.max_lat - self.min_lat
    }
}

/// Georeferenced matrix of per-pixel intensities, row 0 northernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    n_rows: usize,
    n_cols: usize,
    ll_corner: (f64, f64),
    cell_size: f64,
    nodata: f64,
    values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        ll_corner: (f64, f64),
        cell_size: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::validation("raster must have at least one row and column"));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::validation(format!("cell size must be positive, got {cell_size}")));
        }
        if !ll_corner.0.is_finite() || !ll_corner.1.is_finite() {
            return Err(Error::validation("lower-left corner must be finite"));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::validation(format!(
                "expected {} values for a {}x{} raster, got {}",
                n_rows * n_cols,
                n_rows,
                n_cols,
                values.len()
            )));
        }
        let raster = RasterGrid { n_rows, n_cols, ll_corner, cell_size, nodata, values };
        for (idx, &v) in raster.values.iter().enumerate() {
            if raster.is_nodata(v) {
                continue;
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "pixel (row {}, col {}) has invalid intensity {}",
                    idx / n_cols,
                    idx % n_cols,
                    v
                )));
            }
        }
        Ok(raster)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn ll_corner(&self) -> (f64, f64) {
        self.ll_corner
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    /// Raw stored values, nodata sentinels included.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || (v.is_nan() && self.nodata.is_nan())
    }

    /// `None` for nodata pixels.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.n_cols + col];
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let lon = self.ll_corner.0 + (col as f64 + 0.5) * self.cell_size;
        let lat = self.ll_corner.1 + ((self.n_rows - row) as f64 - 0.5) * self.cell_size;
        (lon, lat)
    }

    pub fn extent(&self) -> BBox {
        BBox {
            min_lon: self.ll_corner.0,
            min_lat: self.ll_corner.1,
            max_lon: self.ll_corner.0 + self.n_cols as f64 * self.cell_size,
            max_lat: self.ll_corner.1 + self.n_rows as f64 * self.cell_size,
        }
    }

    fn same_georeference(&self, other: &RasterGrid) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.ll_corner == other.ll_corner
            && self.cell_size == other.cell_size
    }

    pub fn to_ascii_grid(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.n_cols);
        let _ = writeln!(out, "nrows {}", self.n_rows);
        let _ = writeln!(out, "xllcorner {}", self.ll_corner.0);
        let _ = writeln!(out, "yllcorner {}", self.ll_corner.1);
        let _ = writeln!(out, "cellsize {}", self.cell_size);
        let _ = writeln!(out, "NODATA_value {}", self.nodata);
        for row in self.values.chunks(self.n_cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn write_ascii_grid(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_ascii_grid()).map_err(|e| Error::io(path, e))
    }
}

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];

/// Reads an ASCII-grid file.
pub fn load_ascii_grid(path: impl AsRef<Path>) -> Result<RasterGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

/// Parses ASCII-grid text; `origin` is only used to label errors.
pub fn parse_ascii_grid(text: &str, origin: impl AsRef<Path>) -> Result<RasterGrid> {
    let origin = origin.as_ref();
    let mut lines = text.lines().enumerate();
    let mut header = [0.0f64; 6];

    for (slot, key) in HEADER_KEYS.iter().enumerate() {
        let (idx, line) =
            lines.next().ok_or_else(|| Error::parse(origin, slot + 1, format!("missing header line `{key}`")))?;
        let lineno = idx + 1;
        let mut parts = line.split_whitespace();
        let found = parts.next().unwrap_or("");
        if !found.eq_ignore_ascii_case(key) {
            return Err(Error::parse(origin, lineno, format!("expected header `{key}`, found `{found}`")));
        }
        let value = parts.next().ok_or_else(|| Error::parse(origin, lineno, format!("header `{key}` has no value")))?;
        if parts.next().is_some() {
            return Err(Error::parse(origin, lineno, format!("header `{key}` has trailing tokens")));
        }
        header[slot] = value
            .parse::<f64>()
            .map_err(|_| Error::parse(origin, lineno, format!("header `{key}`: bad number `{value}`")))?;
    }

    let as_count = |v: f64, key: &str| -> Result<usize> {
        if v.fract() != 0.0 || v < 1.0 {
            return Err(Error::parse(origin, 1, format!("`{key}` must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    };
    let n_cols = as_count(header[0], "ncols")?;
    let n_rows = as_count(header[1], "nrows")?;
    let nodata = header[5];

    let mut values = Vec::with_capacity(n_rows * n_cols);
    let mut rows_read = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == n_rows {
            return Err(Error::parse(origin, lineno, format!("more than nrows={n_rows} data rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::parse(origin, lineno, format!("bad value `{tok}`")))?;
            if v != nodata && v < 0.0 {
                return Err(Error::validation(format!("{}:{}: negative intensity {}", origin.display(), lineno, v)));
            }
            values.push(v);
        }
        let got = values.len() - before;
        if got != n_cols {
            return Err(Error::parse(origin, lineno, format!("row has {got} values but ncols={n_cols}")));
        }
        rows_read += 1;
    }
    if rows_read != n_rows {
        return Err(Error::parse(
            origin,
            text.lines().count(),
            format!("expected nrows={n_rows} data rows, found {rows_read}"),
        ));
    }

    RasterGrid::new(n_rows, n_cols, (header[2], header[3]), header[4], nodata, values)
}

/// Per-pixel mean over the non-nodata inputs. A pixel is nodata in the output
/// only when it is nodata in every input.
pub fn average_rasters(rasters: &[RasterGrid]) -> Result<RasterGrid> {
    let first = rasters.first().ok_or_else(|| Error::validation("cannot average an empty list of rasters"))?;
    for (i, r) in rasters.iter().enumerate().skip(1) {
        if !first.same_georeference(r) {
            return Err(Error::validation(format!("raster {i} differs in shape or georeference from raster 0")));
        }
    }

    let n = first.values.len();
    let mut values = Vec::with_capacity(n);
    for idx in 0..n {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in rasters {
            let v = r.values[idx];
            if !r.is_nodata(v) {
                sum += v;
                count += 1;
            }
        }
        values.push(if count == 0 { first.nodata } else { sum / count as f64 });
    }
    RasterGrid::new(first.n_rows, first.n_cols, first.ll_corner, first.cell_size, first.nodata, values)
}

/// How pixel values combine into a cell's intensity `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellReduction {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOptions {
    pub reduction: CellReduction,
    /// Base of the logarithm in `M = log(I + 1)`.
    pub log_base: f64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions { reduction: CellReduction::Sum, log_base: std::f64::consts::E }
    }
}

impl AggregateOptions {
    pub fn log_intensity(&self, total: f64) -> f64 {
        if self.log_base == std::f64::consts::E {
            total.ln_1p()
        } else {
            total.ln_1p() / self.log_base.ln()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.log_base > 1.0) || !self.log_base.is_finite() {
            return Err(Error::validation(format!("log base must exceed 1, got {}", self.log_base)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseCell {
    pub node_id: usize,
    pub center: (f64, f64),
    pub total_intensity: f64,
    pub log_intensity: f64,
}

/// The node lattice. `node_id = row * grid_cols + col` with row 0 northernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    grid_rows: usize,
    grid_cols: usize,
    bbox: BBox,
    cells: Vec<CoarseCell>,
}

impl CoarseGrid {
    /// Builds the lattice from per-cell totals given in node order.
    pub fn from_intensities(
        grid_rows: usize,
        grid_cols: usize,
        bbox: BBox,
        totals: &[f64],
        opts: &AggregateOptions,
    ) -> Result<Self> {
        bbox.validate()?;
        opts.validate()?;
        if grid_rows == 0 || grid_cols == 0 {
            return Err(Error::validation("coarse grid needs at least one row and column"));
        }
        if totals.len() != grid_rows * grid_cols {
            return Err(Error::validation(format!(
                "expected {} cell totals, got {}",
                grid_rows * grid_cols,
                totals.len()
            )));
        }
        let w = bbox.width() / grid_cols as f64;
        let h = bbox.height() / grid_rows as f64;
        let mut cells = Vec::with_capacity(totals.len());
        for (node_id, &total) in totals.iter().enumerate() {
            if !(total >= 0.0) || !total.is_finite() {
                return Err(Error::validation(format!("cell {node_id} has invalid intensity {total}")));
            }
            let (r, c) = (node_id / grid_cols, node_id % grid_cols);
            cells.push(CoarseCell {
                node_id,
                center: (bbox.min_lon + (c as f64 + 0.5) * w, bbox.max_lat - (r as f64 + 0.5) * h),
                total_intensity: total,
                log_intensity: opts.log_intensity(total),
            });
        }
        Ok(CoarseGrid { grid_rows, grid_cols, bbox, cells })
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn cells(&self) -> &[CoarseCell] {
        &self.cells
    }

    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    pub fn log_intensities(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.log_intensity).collect()
    }

    pub fn total_intensities(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.total_intensity).collect()
    }

    /// Cell rectangle as `(min_lon, min_lat, max_lon, max_lat)`.
    pub fn cell_bounds(&self, node_id: usize) -> BBox {
        let w = self.bbox.width() / self.grid_cols as f64;
        let h = self.bbox.height() / self.grid_rows as f64;
        let (r, c) = (node_id / self.grid_cols, node_id % self.grid_cols);
        BBox {
            min_lon: self.bbox.min_lon + c as f64 * w,
            max_lon: self.bbox.min_lon + (c + 1) as f64 * w,
            max_lat: self.bbox.max_lat - r as f64 * h,
            min_lat: self.bbox.max_lat - (r + 1) as f64 * h,
        }
    }

    /// Cell index for a point inside the bbox. Points on the max edges belong
    /// to the last row/column.
    pub fn locate(&self, lon: f64, lat: f64) -> Option<usize> {
        if !self.bbox.contains(lon, lat) {
            return None;
        }
        let w = self.bbox.width() / self.grid_cols as f64;
        let h = self.bbox.height() / self.grid_rows as f64;
        let c = (((lon - self.bbox.min_lon) / w).floor() as usize).min(self.grid_cols - 1);
        let r = (((self.bbox.max_lat - lat) / h).floor() as usize).min(self.grid_rows - 1);
        Some(r * self.grid_cols + c)
    }

    /// Node table CSV: `node_id,lon,lat,I,M`.
    pub fn node_table_csv(&self) -> String {
        let mut out = String::from("node_id,lon,lat,I,M\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.node_id,
                real(c.center.0),
                real(c.center.1),
                real(c.total_intensity),
                real(c.log_intensity)
            );
        }
        out
    }

    /// Reads a node table back. Lattice shape and bbox are recovered from the
    /// distinct center coordinates, so the table must come from a full grid.
    pub fn read_node_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        let expected = ["node_id", "lon", "lat", "I", "M"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::parse(path, 1, "node table header must be `node_id,lon,lat,I,M`"));
        }
        let mut cells = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let lineno = i + 2;
            let num = |j: usize| -> Result<f64> {
                rec[j]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad number `{}`", &rec[j])))
            };
            let node_id: usize =
                rec[0].trim().parse().map_err(|_| Error::parse(path, lineno, format!("bad node_id `{}`", &rec[0])))?;
            if node_id != i {
                return Err(Error::parse(path, lineno, format!("expected node_id {i}, got {node_id}")));
            }
            let (total, log) = (num(3)?, num(4)?);
            if total < 0.0 || log < 0.0 {
                return Err(Error::validation(format!("{}:{lineno}: negative intensity", path.display())));
            }
            cells.push(CoarseCell { node_id, center: (num(1)?, num(2)?), total_intensity: total, log_intensity: log });
        }
        if cells.is_empty() {
            return Err(Error::parse(path, 1, "node table has no rows"));
        }

        let distinct = |vals: Vec<f64>| {
            let mut v = vals;
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let lons = distinct(cells.iter().map(|c| c.center.0).collect());
        let lats = distinct(cells.iter().map(|c| c.center.1).collect());
        let (grid_rows, grid_cols) = (lats.len(), lons.len());
        if grid_rows * grid_cols != cells.len() {
            return Err(Error::validation(format!(
                "{}: centers do not form a full {}x{} lattice",
                path.display(),
                grid_rows,
                grid_cols
            )));
        }
        let half = |v: &[f64], fallback: f64| if v.len() > 1 { (v[1] - v[0]) / 2.0 } else { fallback };
        let hw = half(&lons, 0.5);
        let hh = half(&lats, hw);
        let hw = if lons.len() > 1 { hw } else { hh };
        let bbox = BBox {
            min_lon: lons[0] - hw,
            max_lon: lons[lons.len() - 1] + hw,
            min_lat: lats[0] - hh,
            max_lat: lats[lats.len() - 1] + hh,
        };
        Ok(CoarseGrid { grid_rows, grid_cols, bbox, cells })
    }
}

fn check_dims(grid_rows: usize, grid_cols: usize, bbox: &BBox) -> Result<()> {
    bbox.validate()?;
    if grid_rows == 0 || grid_cols == 0 {
        return Err(Error::validation("coarse grid needs at least one row and column"));
    }
    Ok(())
}

fn reduce(sums: Vec<f64>, counts: &[usize], reduction: CellReduction) -> Vec<f64> {
    match reduction {
        CellReduction::Sum => sums,
        CellReduction::Mean => {
            sums.into_iter().zip(counts).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }).collect()
        }
    }
}

/// Aggregates with the default options (sum, natural log).
pub fn aggregate_to_grid(raster: &RasterGrid, grid_rows: usize, grid_cols: usize, bbox: BBox) -> Result<CoarseGrid> {
    aggregate_to_grid_with(raster, grid_rows, grid_cols, bbox, &AggregateOptions::default())
}

pub fn aggregate_to_grid_with(
    raster: &RasterGrid,
    grid_rows: usize,
    grid_cols: usize,
    bbox: BBox,
    opts: &AggregateOptions,
) -> Result<CoarseGrid> {
    check_dims(grid_rows, grid_cols, &bbox)?;
    if !bbox.overlaps(&raster.extent()) {
        return Err(Error::validation(format!(
            "bounding box {:?} does not intersect raster extent {:?}",
            bbox,
            raster.extent()
        )));
    }
    // Empty lattice used only for point location.
    let lattice = CoarseGrid::from_intensities(grid_rows, grid_cols, bbox, &vec![0.0; grid_rows * grid_cols], opts)?;

    let mut sums = vec![0.0; grid_rows * grid_cols];
    let mut counts = vec![0usize; grid_rows * grid_cols];
    for row in 0..raster.n_rows {
        for col in 0..raster.n_cols {
            let Some(v) = raster.get(row, col) else { continue };
            let (lon, lat) = raster.pixel_center(row, col);
            if let Some(node) = lattice.locate(lon, lat) {
                sums[node] += v;
                counts[node] += 1;
            }
        }
    }
    CoarseGrid::from_intensities(grid_rows, grid_cols, bbox, &reduce(sums, &counts, opts.reduction), opts)
}

/// One row of the point-CSV ingestion format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub lon: f64,
    pub lat: f64,
    pub intensity: f64,
}

/// Reads the point CSV alternative (`lon,lat,intensity`).
pub fn load_point_csv(path: impl AsRef<Path>) -> Result<Vec<PointSample>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["lon", "lat", "intensity"] {
        return Err(Error::parse(path, 1, "point CSV header must be `lon,lat,intensity`"));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let lineno = i + 2;
        let mut vals = [0.0f64; 3];
        for (j, slot) in vals.iter_mut().enumerate() {
            *slot =
                rec[j].trim().parse().map_err(|_| Error::parse(path, lineno, format!("bad number `{}`", &rec[j])))?;
        }
        if !vals[0].is_finite() || !vals[1].is_finite() {
            return Err(Error::parse(path, lineno, "non-finite coordinate"));
        }
        if !(vals[2] >= 0.0) {
            return Err(Error::validation(format!("{}:{lineno}: negative intensity {}", path.display(), vals[2])));
        }
        out.push(PointSample { lon: vals[0], lat: vals[1], intensity: vals[2] });
    }
    Ok(out)
}

/// Point counterpart of [`aggregate_to_grid_with`]; points outside `bbox` are ignored.
pub fn aggregate_points(
    points: &[PointSample],
    grid_rows: usize,
    grid_cols: usize,
    bbox: BBox,
    opts: &AggregateOptions,
) -> Result<CoarseGrid> {
    check_dims(grid_rows, grid_cols, &bbox)?;
    let lattice = CoarseGrid::from_intensities(grid_rows, grid_cols, bbox, &vec![0.0; grid_rows * grid_cols], opts)?;
    let mut sums = vec![0.0; grid_rows * grid_cols];
    let mut counts = vec![0usize; grid_rows * grid_cols];
    for p in points {
        if let Some(node) = lattice.locate(p.lon, p.lat) {
            sums[node] += p.intensity;
            counts[node] += 1;
        }
    }
    CoarseGrid::from_intensities(grid_rows, grid_cols, bbox, &reduce(sums, &counts, opts.reduction), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(rows: usize, cols: usize, values: Vec<f64>) -> RasterGrid {
        RasterGrid::new(rows, cols, (0.0, 0.0), 1.0, -9999.0, values).unwrap()
    }

    const GRID_2X2: &str = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n0 1\n2 3\n";

    #[test]
    fn parses_small_grid() {
        let r = parse_ascii_grid(GRID_2X2, "mem").unwrap();
        assert_eq!((r.n_rows(), r.n_cols()), (2, 2));
        assert_eq!(r.values(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(r.get(1, 0), Some(2.0));
        assert_eq!(r.pixel_center(0, 0), (0.5, 1.5));
    }

    #[test]
    fn short_row_is_a_parse_error() {
        let text = "ncols 3\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n";
        match parse_ascii_grid(text, "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_error_names_line() {
        let text = "ncols 2\nrows 2\n";
        match parse_ascii_grid(text, "mem") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("nrows"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nodata_pixel_is_not_negative() {
        let text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 4\n";
        let r = parse_ascii_grid(text, "mem").unwrap();
        assert_eq!(r.get(0, 0), None);
        assert_eq!(r.get(0, 1), Some(4.0));
    }

    #[test]
    fn negative_pixel_is_rejected() {
        let text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-1 4\n";
        assert!(matches!(parse_ascii_grid(text, "mem"), Err(Error::Validation(_))));
    }

    #[test]
    fn ascii_round_trip() {
        let r = raster(2, 3, vec![0.1, 2.5, 3.0, 1e-7, 7.25, -9999.0]);
        let back = parse_ascii_grid(&r.to_ascii_grid(), "mem").unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn averaging() {
        let a = raster(1, 2, vec![2.0, -9999.0]);
        let b = raster(1, 2, vec![4.0, 6.0]);
        let avg = average_rasters(&[a.clone(), b]).unwrap();
        assert_eq!(avg.values(), &[3.0, 6.0]);
        assert_eq!(average_rasters(std::slice::from_ref(&a)).unwrap(), a);

        let both_missing = average_rasters(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(both_missing.get(0, 1), None);
    }

    #[test]
    fn averaging_rejects_mismatch_and_empty() {
        let a = raster(1, 2, vec![2.0, 1.0]);
        let b = raster(2, 1, vec![2.0, 1.0]);
        assert!(average_rasters(&[a, b]).is_err());
        assert!(average_rasters(&[]).is_err());
    }

    #[test]
    fn full_sum_single_cell() {
        let r = raster(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let g = aggregate_to_grid(&r, 1, 1, r.extent()).unwrap();
        assert_eq!(g.cells()[0].total_intensity, 10.0);
        assert_eq!(g.cells()[0].log_intensity, 11f64.ln());
    }

    #[test]
    fn dark_raster_gives_zero_cells() {
        let r = raster(3, 3, vec![0.0; 9]);
        let g = aggregate_to_grid(&r, 3, 1, r.extent()).unwrap();
        assert!(g.cells().iter().all(|c| c.total_intensity == 0.0 && c.log_intensity == 0.0));
    }

    #[test]
    fn quadrant_sums() {
        // NW quadrant 1+2+5+6=14, NE 3+4+7+8=22, SW 9+10+13+14=46, SE 11+12+15+16=54.
        let r = raster(4, 4, (1..=16).map(f64::from).collect());
        let g = aggregate_to_grid(&r, 2, 2, r.extent()).unwrap();
        let totals = g.total_intensities();
        assert_eq!(totals, vec![14.0, 22.0, 46.0, 54.0]);
        assert_eq!(g.cells()[0].center, (1.0, 3.0));
    }

    #[test]
    fn mean_reduction_and_log_base() {
        let r = raster(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let opts = AggregateOptions { reduction: CellReduction::Mean, log_base: 10.0 };
        let g = aggregate_to_grid_with(&r, 1, 1, r.extent(), &opts).unwrap();
        assert_eq!(g.cells()[0].total_intensity, 2.5);
        assert!((g.cells()[0].log_intensity - 3.5f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn disjoint_bbox_is_an_error() {
        let r = raster(2, 2, vec![1.0; 4]);
        let far = BBox::new(10.0, 10.0, 11.0, 11.0).unwrap();
        assert!(aggregate_to_grid(&r, 1, 1, far).is_err());
    }

    #[test]
    fn empty_cells_are_dark() {
        // bbox twice as wide as the raster: the eastern cell receives no pixel.
        let r = raster(1, 2, vec![1.0, 1.0]);
        let bbox = BBox::new(0.0, 0.0, 4.0, 1.0).unwrap();
        let g = aggregate_to_grid(&r, 1, 2, bbox).unwrap();
        assert_eq!(g.total_intensities(), vec![2.0, 0.0]);
    }

    #[test]
    fn points_aggregate_like_pixels() {
        let pts = [
            PointSample { lon: 0.5, lat: 0.5, intensity: 2.0 },
            PointSample { lon: 1.5, lat: 0.5, intensity: 3.0 },
            PointSample { lon: 0.2, lat: 0.9, intensity: 1.0 },
            PointSample { lon: 5.0, lat: 5.0, intensity: 9.0 },
        ];
        let bbox = BBox::new(0.0, 0.0, 2.0, 1.0).unwrap();
        let g = aggregate_points(&pts, 1, 2, bbox, &AggregateOptions::default()).unwrap();
        assert_eq!(g.total_intensities(), vec![3.0, 3.0]);
    }
}
