//! Desk-scale synthetic scenarios: Gaussian light blobs on a dark field, a
//! two-year growth pair, and a survey with a planted affine target.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::raster::{aggregate_to_grid, average_rasters, BBox, RasterGrid};
use crate::rng::stream;
use crate::survey::{survey_csv, SurveySample};

/// Pixel size of every synthetic raster, in degrees.
pub const PIXEL_DEG: f64 = 0.1;
/// Pixels per coarse cell edge.
pub const PIXELS_PER_CELL: usize = 5;
/// Saturation level of a pixel, as in 6-bit composites.
pub const SATURATION: f64 = 63.0;
/// Pixels dimmer than this are recorded as dark (0).
pub const DETECTION_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    TwoBlobs,
    GrowthMerge,
    PlantedLinear,
}

impl Scenario {
    pub const NAMES: [&'static str; 3] = ["two-blobs", "growth-merge", "planted-linear"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "two-blobs" => Ok(Scenario::TwoBlobs),
            "growth-merge" => Ok(Scenario::GrowthMerge),
            "planted-linear" => Ok(Scenario::PlantedLinear),
            other => Err(Error::validation(format!(
                "unknown scenario `{other}`; valid names: {}",
                Scenario::NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TwoBlobs => "two-blobs",
            Scenario::GrowthMerge => "growth-merge",
            Scenario::PlantedLinear => "planted-linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Share of cluster-level target variance that is noise (planted-linear).
    pub noise_share: f64,
    /// Monthly images generated per year; the pipeline averages them.
    pub months: usize,
    /// Survey sites (planted-linear).
    pub sites: usize,
    pub households_per_site: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { noise_share: 0.3, months: 3, sites: 600, households_per_site: 2 }
    }
}

/// Everything a scenario produces. Raster and survey names are file names
/// relative to the directory the bundle is written to.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub scenario: Scenario,
    pub seed: u64,
    pub rasters: Vec<(String, RasterGrid)>,
    pub survey: Option<Vec<SurveySample>>,
    pub config: String,
}

impl SyntheticBundle {
    /// Writes rasters, the survey CSV and `config.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, r) in &self.rasters {
            r.write_ascii_grid(dir.join(name))?;
        }
        if let Some(s) = &self.survey {
            let p = dir.join("survey.csv");
            fs::write(&p, survey_csv(s)).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("config.txt");
        fs::write(&p, &self.config).map_err(|e| Error::io(&p, e))
    }
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    lon: f64,
    lat: f64,
    sigma_lon: f64,
    sigma_lat: f64,
    amp: f64,
}

impl Blob {
    fn round(lon: f64, lat: f64, sigma: f64, amp: f64) -> Self {
        Blob { lon, lat, sigma_lon: sigma, sigma_lat: sigma, amp }
    }

    fn at(&self, lon: f64, lat: f64) -> f64 {
        let dx = (lon - self.lon) / self.sigma_lon;
        let dy = (lat - self.lat) / self.sigma_lat;
        self.amp * (-0.5 * (dx * dx + dy * dy)).exp()
    }
}

/// Lattice shared by a scenario's rasters and its coarse grid.
#[derive(Debug, Clone, Copy)]
struct Layout {
    grid_rows: usize,
    grid_cols: usize,
    min_lon: f64,
    min_lat: f64,
}

impl Layout {
    fn bbox(&self) -> BBox {
        let cell = PIXEL_DEG * PIXELS_PER_CELL as f64;
        BBox {
            min_lon: self.min_lon,
            min_lat: self.min_lat,
            max_lon: self.min_lon + self.grid_cols as f64 * cell,
            max_lat: self.min_lat + self.grid_rows as f64 * cell,
        }
    }

    fn cell_center(&self, node: usize) -> (f64, f64) {
        let cell = PIXEL_DEG * PIXELS_PER_CELL as f64;
        let (r, c) = (node / self.grid_cols, node % self.grid_cols);
        (self.min_lon + (c as f64 + 0.5) * cell, self.min_lat + (self.grid_rows as f64 - r as f64 - 0.5) * cell)
    }

    /// Renders one monthly image: blobs plus background, with multiplicative
    /// month-to-month jitter, clipped to the detection floor and saturation level.
    fn render(&self, blobs: &[Blob], background: f64, jitter: f64, rng: &mut impl Rng) -> Result<RasterGrid> {
        let rows = self.grid_rows * PIXELS_PER_CELL;
        let cols = self.grid_cols * PIXELS_PER_CELL;
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let lat = self.min_lat + (rows as f64 - r as f64 - 0.5) * PIXEL_DEG;
            for c in 0..cols {
                let lon = self.min_lon + (c as f64 + 0.5) * PIXEL_DEG;
                let base = background + blobs.iter().map(|b| b.at(lon, lat)).sum::<f64>();
                let eps: f64 = rng.sample(StandardNormal);
                let mut v = (base * (1.0 + jitter * eps)).clamp(0.0, SATURATION);
                if v < DETECTION_FLOOR {
                    v = 0.0;
                }
                values.push((v * 1e4).round() / 1e4);
            }
        }
        RasterGrid::new(rows, cols, (self.min_lon, self.min_lat), PIXEL_DEG, -9999.0, values)
    }

    fn months(
        &self,
        prefix: &str,
        blobs: &[Blob],
        background: f64,
        opts: &SynthOptions,
        seed: u64,
        year: u64,
    ) -> Result<Vec<(String, RasterGrid)>> {
        (0..opts.months.max(1))
            .map(|m| {
                let mut rng = stream(seed, year, m as u64);
                Ok((format!("{prefix}_m{:02}.asc", m + 1), self.render(blobs, background, 0.05, &mut rng)?))
            })
            .collect()
    }
}

fn bbox_line(b: &BBox) -> String {
    format!("bbox = {},{},{},{}", b.min_lon, b.min_lat, b.max_lon, b.max_lat)
}

fn names(files: &[(String, RasterGrid)]) -> String {
    files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",")
}

const TWO_BLOBS: Layout = Layout { grid_rows: 10, grid_cols: 20, min_lon: 30.0, min_lat: -5.0 };

fn twin_blobs(layout: &Layout) -> [Blob; 2] {
    let b = layout.bbox();
    let mid = 0.5 * (b.min_lat + b.max_lat);
    [Blob::round(b.min_lon + 0.2 * b.width(), mid, 0.6, 60.0), Blob::round(b.min_lon + 0.8 * b.width(), mid, 0.6, 60.0)]
}

/// Parameters shared by the blob scenarios' suggested config.
const BLOB_NETWORK: &str = "exponent = 2\ntau = 2000\nk_rewire = 1\n";

fn two_blobs(seed: u64, opts: &SynthOptions) -> Result<SyntheticBundle> {
    let layout = TWO_BLOBS;
    let rasters = layout.months("two_blobs", &twin_blobs(&layout), 0.0, opts, seed, 0)?;
    let config = format!(
        "# two bright blobs on a dark field\nrasters = {}\n{}\ngrid_rows = {}\ngrid_cols = {}\n{BLOB_NETWORK}walk_length = 10\nwalks_per_node = 50\nseed = {seed}\noutput_dir = out\n",
        names(&rasters),
        bbox_line(&layout.bbox()),
        layout.grid_rows,
        layout.grid_cols,
    );
    Ok(SyntheticBundle { scenario: Scenario::TwoBlobs, seed, rasters, survey: None, config })
}

fn growth_merge(seed: u64, opts: &SynthOptions) -> Result<SyntheticBundle> {
    let layout = TWO_BLOBS;
    let blobs = twin_blobs(&layout);
    let b = layout.bbox();
    // Year t+1: an elongated ridge lights up the band between the blobs.
    let band = Blob {
        lon: 0.5 * (b.min_lon + b.max_lon),
        lat: blobs[0].lat,
        sigma_lon: 0.3 * b.width(),
        sigma_lat: 0.9,
        amp: 60.0,
    };
    let mut rasters = layout.months("year_t", &blobs, 0.0, opts, seed, 0)?;
    let grown = [blobs[0], blobs[1], band];
    let later = layout.months("year_t1", &grown, 0.0, opts, seed, 1)?;
    let config = format!(
        "# a dark band between two blobs brightens from year t to t+1\nrasters = {}\nsnapshot.t = {}\nsnapshot.t1 = {}\n{}\ngrid_rows = {}\ngrid_cols = {}\n{BLOB_NETWORK}walk_length = 10\nwalks_per_node = 50\nseed = {seed}\noutput_dir = out\n",
        names(&later),
        names(&rasters),
        names(&later),
        bbox_line(&b),
        layout.grid_rows,
        layout.grid_cols,
    );
    rasters.extend(later);
    Ok(SyntheticBundle { scenario: Scenario::GrowthMerge, seed, rasters, survey: None, config })
}

const PLANTED: Layout = Layout { grid_rows: 20, grid_cols: 20, min_lon: 30.0, min_lat: -10.0 };

/// Affine map from log-intensity to consumption.
pub const PLANTED_SLOPE: f64 = 20.0;

fn planted_linear(seed: u64, opts: &SynthOptions) -> Result<SyntheticBundle> {
    if !(0.0..1.0).contains(&opts.noise_share) {
        return Err(Error::validation(format!("noise share must lie in [0, 1), got {}", opts.noise_share)));
    }
    if opts.sites == 0 || opts.households_per_site == 0 {
        return Err(Error::validation("planted-linear needs at least one site and household"));
    }
    let layout = PLANTED;
    let bbox = layout.bbox();
    let mut rng = stream(seed, 100, 0);
    let blobs: Vec<Blob> = (0..8)
        .map(|_| {
            let sigma = rng.gen_range(0.4..1.5);
            Blob {
                lon: rng.gen_range(bbox.min_lon..bbox.max_lon),
                lat: rng.gen_range(bbox.min_lat..bbox.max_lat),
                sigma_lon: sigma,
                sigma_lat: sigma * rng.gen_range(0.7..1.4),
                amp: rng.gen_range(10.0..60.0),
            }
        })
        .collect();
    let rasters = layout.months("planted", &blobs, 0.05, opts, seed, 0)?;

    // The target is planted on the same averaged image the pipeline sees.
    let images: Vec<RasterGrid> = rasters.iter().map(|(_, r)| r.clone()).collect();
    let grid = aggregate_to_grid(&average_rasters(&images)?, layout.grid_rows, layout.grid_cols, bbox)?;
    let m = grid.log_intensities();

    let mut site_rng = stream(seed, 101, 0);
    let sites: Vec<(usize, f64, f64)> = (0..opts.sites)
        .map(|_| {
            let node = site_rng.gen_range(0..grid.node_count());
            let (lon, lat) = layout.cell_center(node);
            let lon = lon + site_rng.gen_range(-0.1..0.1);
            let lat = lat + site_rng.gen_range(-0.1..0.1);
            // Round to the survey's coordinate precision so households at a
            // site share coordinates exactly.
            (node, (lon * 1e5).round() / 1e5, (lat * 1e5).round() / 1e5)
        })
        .collect();

    let signal: Vec<f64> = sites.iter().map(|&(n, _, _)| PLANTED_SLOPE * m[n]).collect();
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let var = signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / signal.len() as f64;
    // Cluster means average `households_per_site` draws, so the household
    // noise variance is scaled up to hit the requested cluster-level share.
    let cluster_noise_var = var * opts.noise_share / (1.0 - opts.noise_share);
    let sd = (cluster_noise_var * opts.households_per_site as f64).sqrt();
    let intercept = 10.0 + 5.0 * sd;

    let mut noise_rng = stream(seed, 102, 0);
    let mut survey = Vec::with_capacity(opts.sites * opts.households_per_site);
    for (&(_, lon, lat), s) in sites.iter().zip(&signal) {
        for _ in 0..opts.households_per_site {
            let eps: f64 = noise_rng.sample(StandardNormal);
            let c = (intercept + s + sd * eps).max(0.0);
            survey.push(SurveySample { lon, lat, consumption: c, year: Some(2013) });
        }
    }

    let config = format!(
        "# consumption = {intercept:.6} + {PLANTED_SLOPE} * M(node) + noise (noise share {})\nrasters = {}\nsurvey = survey.csv\n{}\ngrid_rows = {}\ngrid_cols = {}\nexponent = 2\ntau = 5000\nk_rewire = 3\nwalk_length = 10\nwalks_per_node = 50\nseed = {seed}\noutput_dir = out\n",
        opts.noise_share,
        names(&rasters),
        bbox_line(&bbox),
        layout.grid_rows,
        layout.grid_cols,
    );
    Ok(SyntheticBundle { scenario: Scenario::PlantedLinear, seed, rasters, survey: Some(survey), config })
}

pub fn generate_synthetic(scenario: Scenario, seed: u64) -> Result<SyntheticBundle> {
    generate_synthetic_with(scenario, seed, &SynthOptions::default())
}

pub fn generate_synthetic_with(scenario: Scenario, seed: u64, opts: &SynthOptions) -> Result<SyntheticBundle> {
    match scenario {
        Scenario::TwoBlobs => two_blobs(seed, opts),
        Scenario::GrowthMerge => growth_merge(seed, opts),
        Scenario::PlantedLinear => planted_linear(seed, opts),
    }
}
