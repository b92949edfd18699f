//! Normal-incidence transfer-matrix optics for thin-film stacks.
//!
//! Complex index convention: `N = n - ik` with `k >= 0` for absorbing media,
//! paired with the characteristic matrix
//! `[[cos d, i sin d / N], [i N sin d, cos d]]`, `d = 2 pi N t / lambda`.
//! Admittances are expressed in units of the free-space admittance, so for
//! non-magnetic media `eta = N`.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("wavelength {wavelength} nm outside table range [{min}, {max}] nm for `{material}`")]
    OutOfRange { material: String, wavelength: f64, min: f64, max: f64 },
    #[error("invalid stack: {0}")]
    InvalidStack(String),
    #[error("empty spectrum")]
    EmptySpectrum,
    #[error("empty design range: {0}")]
    EmptyRange(String),
    #[error("invalid material table `{name}`: {reason}")]
    BadTable { name: String, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tabulated complex refractive index, linearly interpolated in wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    pub name: String,
    /// Comment lines from the file header.
    pub source: Vec<String>,
    wavelength_nm: Vec<f64>,
    n: Vec<f64>,
    k: Vec<f64>,
}

#[derive(Deserialize)]
struct TableRow {
    wavelength_nm: f64,
    n: f64,
    k: f64,
}

impl MaterialTable {
    pub fn new(
        name: impl Into<String>,
        source: Vec<String>,
        rows: Vec<(f64, f64, f64)>,
    ) -> Result<Self, OpticsError> {
        let name = name.into();
        let bad = |reason: &str| OpticsError::BadTable { name: name.clone(), reason: reason.into() };
        if rows.len() < 2 {
            return Err(bad("need at least two rows"));
        }
        if rows.iter().any(|&(w, n, k)| !(w.is_finite() && n.is_finite() && k.is_finite())) {
            return Err(bad("non-finite entry"));
        }
        if rows.iter().any(|&(_, _, k)| k < 0.0) {
            return Err(bad("negative extinction coefficient"));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(bad("wavelengths must be strictly increasing"));
        }
        Ok(MaterialTable {
            source,
            wavelength_nm: rows.iter().map(|r| r.0).collect(),
            n: rows.iter().map(|r| r.1).collect(),
            k: rows.iter().map(|r| r.2).collect(),
            name,
        })
    }

    /// Parses `wavelength_nm,n,k` CSV text; `#` lines form the source header.
    pub fn parse(name: &str, text: &str) -> Result<Self, OpticsError> {
        let source = text
            .lines()
            .filter_map(|l| l.trim_start().strip_prefix('#'))
            .map(|l| l.trim().to_string())
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let rows = reader
            .deserialize::<TableRow>()
            .map(|r| r.map(|r| (r.wavelength_nm, r.n, r.k)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, source, rows)
    }

    pub fn load(path: &Path) -> Result<Self, OpticsError> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("material").to_string();
        Self::parse(&name, &std::fs::read_to_string(path)?)
    }

    pub fn constant(name: &str, n: f64, k: f64) -> Result<Self, OpticsError> {
        Self::new(name, vec![], vec![(1.0, n, k), (1.0e5, n, k)])
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelength_nm[0], *self.wavelength_nm.last().unwrap())
    }

    /// Complex index `n - ik` at `wavelength_nm`.
    pub fn index(&self, wavelength_nm: f64) -> Result<Complex64, OpticsError> {
        let (min, max) = self.range();
        if !(wavelength_nm >= min && wavelength_nm <= max) {
            return Err(OpticsError::OutOfRange {
                material: self.name.clone(),
                wavelength: wavelength_nm,
                min,
                max,
            });
        }
        let w = &self.wavelength_nm;
        let hi = w.partition_point(|&x| x < wavelength_nm).clamp(1, w.len() - 1);
        let lo = hi - 1;
        let f = (wavelength_nm - w[lo]) / (w[hi] - w[lo]);
        let n = self.n[lo] + f * (self.n[hi] - self.n[lo]);
        let k = self.k[lo] + f * (self.k[hi] - self.k[lo]);
        Ok(Complex64::new(n, -k))
    }
}

/// Named collection of material tables.
#[derive(Debug, Clone, Default)]
pub struct Materials {
    tables: BTreeMap<String, MaterialTable>,
}

const BUNDLED: [(&str, &str); 6] = [
    ("air", include_str!("../data/materials/air.csv")),
    ("Ag", include_str!("../data/materials/ag.csv")),
    ("Pt", include_str!("../data/materials/pt.csv")),
    ("Ta", include_str!("../data/materials/ta.csv")),
    ("SiO2", include_str!("../data/materials/sio2.csv")),
    ("GeSe3", include_str!("../data/materials/gese3.csv")),
];

impl Materials {
    /// Tables shipped with the crate: air, Ag, Pt, Ta, SiO2, GeSe3.
    pub fn bundled() -> Self {
        let mut m = Materials::default();
        for (id, text) in BUNDLED {
            let table = MaterialTable::parse(id, text).expect("bundled material table is valid");
            m.insert(id, table);
        }
        m
    }

    pub fn insert(&mut self, id: &str, table: MaterialTable) {
        self.tables.insert(id.to_string(), table);
    }

    pub fn get(&self, id: &str) -> Result<&MaterialTable, OpticsError> {
        self.tables.get(id).ok_or_else(|| OpticsError::UnknownMaterial(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn index(&self, id: &str, wavelength_nm: f64) -> Result<Complex64, OpticsError> {
        self.get(id)?.index(wavelength_nm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub material: String,
    pub thickness_nm: f64,
}

impl Layer {
    pub fn new(material: &str, thickness_nm: f64) -> Self {
        Layer { material: material.to_string(), thickness_nm }
    }
}

/// Layers ordered from the illuminated side (ambient) toward the substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerStack {
    pub ambient: String,
    pub layers: Vec<Layer>,
    pub substrate: String,
}

pub const DEFAULT_TOP_AG_NM: f64 = 20.0;
pub const DEFAULT_BOTTOM_AG_NM: f64 = 100.0;

impl LayerStack {
    /// air / Ag(top) / GeSe3(d) / Ag(bottom) / SiO2.
    pub fn ag_gese3_ag(top_nm: f64, gese3_nm: f64, bottom_nm: f64) -> Self {
        LayerStack {
            ambient: "air".into(),
            layers: vec![
                Layer::new("Ag", top_nm),
                Layer::new("GeSe3", gese3_nm),
                Layer::new("Ag", bottom_nm),
            ],
            substrate: "SiO2".into(),
        }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness_nm.is_finite() && l.thickness_nm >= 0.0) {
                return Err(OpticsError::InvalidStack(format!(
                    "layer {i} ({}) thickness {}",
                    l.material, l.thickness_nm
                )));
            }
        }
        Ok(())
    }
}

/// Reflectance, transmittance and absorptance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rta {
    pub r: f64,
    pub t: f64,
    pub a: f64,
}

/// Characteristic matrix of a homogeneous layer with complex index `index`.
pub fn characteristic_matrix(index: Complex64, thickness_nm: f64, wavelength_nm: f64) -> Matrix2 {
    let delta = index * (2.0 * std::f64::consts::PI * thickness_nm / wavelength_nm);
    let (c, s) = (delta.cos(), delta.sin());
    let i = Complex64::i();
    [[c, i * s / index], [i * index * s, c]]
}

pub fn layer_matrix(layer: &Layer, wavelength_nm: f64, materials: &Materials) -> Result<Matrix2, OpticsError> {
    let index = materials.index(&layer.material, wavelength_nm)?;
    Ok(characteristic_matrix(index, layer.thickness_nm, wavelength_nm))
}

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn identity() -> Matrix2 {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// Response from resolved indices: `layers` holds `(N, thickness_nm)`.
pub fn response_from_indices(
    ambient: Complex64,
    layers: &[(Complex64, f64)],
    substrate: Complex64,
    wavelength_nm: f64,
) -> Rta {
    let m = layers.iter().fold(identity(), |acc, &(n, d)| {
        matmul(&acc, &characteristic_matrix(n, d, wavelength_nm))
    });
    let b = m[0][0] + m[0][1] * substrate;
    let c = m[1][0] + m[1][1] * substrate;
    let denom = ambient * b + c;
    let r_amp = (ambient * b - c) / denom;
    let t_amp = 2.0 * ambient / denom;
    let r = r_amp.norm_sqr();
    let t = substrate.re / ambient.re * t_amp.norm_sqr();
    Rta { r, t, a: 1.0 - r - t }
}

struct ResolvedStack {
    ambient: Complex64,
    layers: Vec<(Complex64, f64)>,
    substrate: Complex64,
}

fn resolve(stack: &LayerStack, wavelength_nm: f64, materials: &Materials) -> Result<ResolvedStack, OpticsError> {
    Ok(ResolvedStack {
        ambient: materials.index(&stack.ambient, wavelength_nm)?,
        layers: stack
            .layers
            .iter()
            .map(|l| Ok((materials.index(&l.material, wavelength_nm)?, l.thickness_nm)))
            .collect::<Result<_, OpticsError>>()?,
        substrate: materials.index(&stack.substrate, wavelength_nm)?,
    })
}

pub fn stack_response(stack: &LayerStack, wavelength_nm: f64, materials: &Materials) -> Result<Rta, OpticsError> {
    stack.validate()?;
    let s = resolve(stack, wavelength_nm, materials)?;
    Ok(response_from_indices(s.ambient, &s.layers, s.substrate, wavelength_nm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub wavelength_nm: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectralResponse {
    pub points: Vec<SpectralPoint>,
}

impl SpectralResponse {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform wavelength grid including both endpoints.
pub fn wavelength_grid(min_nm: f64, max_nm: f64, n_points: usize) -> Result<Vec<f64>, OpticsError> {
    if n_points < 2 || min_nm.partial_cmp(&max_nm) != Some(std::cmp::Ordering::Less) {
        return Err(OpticsError::EmptyRange(format!("[{min_nm}, {max_nm}] with {n_points} points")));
    }
    let step = (max_nm - min_nm) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| if i == n_points - 1 { max_nm } else { min_nm + step * i as f64 })
        .collect())
}

pub fn absorption_spectrum(
    stack: &LayerStack,
    min_nm: f64,
    max_nm: f64,
    n_points: usize,
    materials: &Materials,
) -> Result<SpectralResponse, OpticsError> {
    let points = wavelength_grid(min_nm, max_nm, n_points)?
        .into_iter()
        .map(|w| {
            let rta = stack_response(stack, w, materials)?;
            Ok(SpectralPoint { wavelength_nm: w, r: rta.r, t: rta.t, a: rta.a })
        })
        .collect::<Result<_, OpticsError>>()?;
    Ok(SpectralResponse { points })
}

/// `(lambda_peak, A_peak)`: maximum absorptance, ties to the shorter wavelength.
pub fn peak_absorption(spectrum: &SpectralResponse) -> Result<(f64, f64), OpticsError> {
    let mut iter = spectrum.points.iter();
    let first = iter.next().ok_or(OpticsError::EmptySpectrum)?;
    let best = iter.fold(first, |best, p| if p.a > best.a { p } else { best });
    Ok((best.wavelength_nm, best.a))
}

/// A stack whose `cavity_layer` thickness is the design variable, with the
/// spectral window used to locate absorption peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityTemplate {
    pub stack: LayerStack,
    pub cavity_layer: usize,
    pub window_min_nm: f64,
    pub window_max_nm: f64,
    pub window_points: usize,
}

impl CavityTemplate {
    /// Ag/GeSe3/Ag with a 400-1100 nm, 1 nm window.
    pub fn ag_gese3_ag(top_nm: f64) -> Self {
        CavityTemplate {
            stack: LayerStack::ag_gese3_ag(top_nm, 0.0, DEFAULT_BOTTOM_AG_NM),
            cavity_layer: 1,
            window_min_nm: 400.0,
            window_max_nm: 1100.0,
            window_points: 701,
        }
    }

    pub fn with_thickness(&self, d_nm: f64) -> Result<LayerStack, OpticsError> {
        let mut stack = self.stack.clone();
        let layer = stack.layers.get_mut(self.cavity_layer).ok_or_else(|| {
            OpticsError::InvalidStack(format!("cavity layer {} out of range", self.cavity_layer))
        })?;
        layer.thickness_nm = d_nm;
        Ok(stack)
    }

    pub fn spectrum(&self, d_nm: f64, materials: &Materials) -> Result<SpectralResponse, OpticsError> {
        absorption_spectrum(
            &self.with_thickness(d_nm)?,
            self.window_min_nm,
            self.window_max_nm,
            self.window_points,
            materials,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityDesign {
    pub thickness_nm: f64,
    pub peak_wavelength_nm: f64,
    pub peak_absorption: f64,
}

/// Peak of each candidate thickness, on a 1 nm grid over `[d_min, d_max]`.
pub fn thickness_scan(
    template: &CavityTemplate,
    d_min: f64,
    d_max: f64,
    materials: &Materials,
) -> Result<Vec<CavityDesign>, OpticsError> {
    if !(d_min.is_finite() && d_max.is_finite() && d_min < d_max && d_min >= 0.0) {
        return Err(OpticsError::EmptyRange(format!("d in [{d_min}, {d_max}]")));
    }
    template.with_thickness(d_min)?.validate()?;
    let grid = wavelength_grid(template.window_min_nm, template.window_max_nm, template.window_points)?;
    let resolved = grid
        .iter()
        .map(|&w| resolve(&template.stack, w, materials))
        .collect::<Result<Vec<_>, _>>()?;
    let n = (d_max - d_min + 1e-9).floor() as usize;
    let designs = (0..=n)
        .into_par_iter()
        .map(|i| {
            let d = d_min + i as f64;
            let mut best = (grid[0], f64::NEG_INFINITY);
            let mut layers = Vec::new();
            for (w, s) in grid.iter().zip(&resolved) {
                layers.clone_from(&s.layers);
                layers[template.cavity_layer].1 = d;
                let a = response_from_indices(s.ambient, &layers, s.substrate, *w).a;
                if a > best.1 {
                    best = (*w, a);
                }
            }
            CavityDesign { thickness_nm: d, peak_wavelength_nm: best.0, peak_absorption: best.1 }
        })
        .collect();
    Ok(designs)
}

/// Thickness whose absorption peak lies closest to `target_nm`, ties to the
/// thinner layer.
pub fn design_thickness(
    template: &CavityTemplate,
    target_nm: f64,
    d_min: f64,
    d_max: f64,
    materials: &Materials,
) -> Result<CavityDesign, OpticsError> {
    let scan = thickness_scan(template, d_min, d_max, materials)?;
    pick_design(&scan, target_nm)
}

/// Selection step of [`design_thickness`] over a precomputed scan.
pub fn pick_design(scan: &[CavityDesign], target_nm: f64) -> Result<CavityDesign, OpticsError> {
    let mut iter = scan.iter();
    let first = *iter.next().ok_or_else(|| OpticsError::EmptyRange("no thicknesses".into()))?;
    let dist = |c: &CavityDesign| (c.peak_wavelength_nm - target_nm).abs();
    Ok(iter.fold(first, |best, c| if dist(c) < dist(&best) { *c } else { best }))
}

/// Relative absorptance `A(lambda) / A(design)` of a stack, used to scale
/// optical power delivered to a device driven off its design wavelength.
pub fn absorption_scaling(
    stack: &LayerStack,
    wavelength_nm: f64,
    design_wavelength_nm: f64,
    materials: &Materials,
) -> Result<f64, OpticsError> {
    let a = stack_response(stack, wavelength_nm, materials)?.a;
    let a0 = stack_response(stack, design_wavelength_nm, materials)?.a;
    if a0 <= 0.0 {
        return Err(OpticsError::InvalidStack("no absorption at design wavelength".into()));
    }
    Ok(a / a0)
}
