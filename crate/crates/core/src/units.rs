//! Physical constants, unit conversions, and parameter containers.
//!
//! Energies are carried in meV throughout the crate; eV and GHz appear only
//! at I/O boundaries. All constants are CODATA 2018.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values in SI units.
pub mod si {
    /// Planck constant, J s (exact).
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
    /// Elementary charge, C (exact).
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Speed of light in vacuum, m/s (exact).
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Vacuum permittivity, F/m.
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    /// Atomic mass constant, kg.
    pub const AMU: f64 = 1.660_539_066_60e-27;
    /// One angstrom in metres.
    pub const ANGSTROM: f64 = 1e-10;
    /// One debye in C m (1e-21 / c).
    pub const DEBYE: f64 = 1e-21 / SPEED_OF_LIGHT;
}

/// Derived constants used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// hbar^2 / (1 amu * 1 Angstrom^2) expressed in meV.
    pub hbar2_over_amu_a2: f64,
    /// GHz per meV (1 meV / h).
    pub mev_to_ghz: f64,
    /// C m per debye.
    pub debye_to_cm: f64,
    pub eps0: f64,
    pub hbar: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const fn codata2018() -> Self {
        let mev = si::ELEMENTARY_CHARGE * 1e-3;
        PhysicalConstants {
            hbar2_over_amu_a2: si::HBAR * si::HBAR / (si::AMU * si::ANGSTROM * si::ANGSTROM) / mev,
            mev_to_ghz: mev / si::PLANCK / 1e9,
            debye_to_cm: si::DEBYE,
            eps0: si::EPSILON_0,
            hbar: si::HBAR,
            c: si::SPEED_OF_LIGHT,
        }
    }
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants::codata2018();

/// Energy in meV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mev(pub f64);

/// Frequency in GHz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ghz(pub f64);

impl Mev {
    pub fn to_ghz(self) -> Ghz {
        energy_to_frequency(self)
    }

    pub fn from_ev(ev: f64) -> Self {
        Mev(ev * 1e3)
    }

    pub fn to_ev(self) -> f64 {
        self.0 * 1e-3
    }
}

impl Ghz {
    pub fn to_mev(self) -> Mev {
        frequency_to_energy(self)
    }
}

impl fmt::Display for Mev {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} meV", self.0)
    }
}

impl fmt::Display for Ghz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GHz", self.0)
    }
}

/// E / h in GHz.
pub fn energy_to_frequency(e: Mev) -> Ghz {
    Ghz(e.0 * CONSTANTS.mev_to_ghz)
}

pub fn frequency_to_energy(f: Ghz) -> Mev {
    Mev(f.0 / CONSTANTS.mev_to_ghz)
}

/// Length scale of the oscillator, l = sqrt(hbar^2 / (amu * hbar_omega)), in
/// Angstrom * sqrt(amu). Dimensionless boson coordinates are X = q / l.
pub fn oscillator_length(hbar_omega: Mev) -> Result<f64> {
    if !(hbar_omega.0 > 0.0) || !hbar_omega.0.is_finite() {
        return Err(Error::Domain(format!(
            "oscillator length needs a positive phonon energy, got {}",
            hbar_omega.0
        )));
    }
    Ok((CONSTANTS.hbar2_over_amu_a2 / hbar_omega.0).sqrt())
}

/// Where a parameter set sits on the strain axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrainLabel {
    PressureGpa(f64),
    StrainFraction(f64),
}

impl StrainLabel {
    pub fn value(self) -> f64 {
        match self {
            StrainLabel::PressureGpa(v) | StrainLabel::StrainFraction(v) => v,
        }
    }
}

impl fmt::Display for StrainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrainLabel::PressureGpa(p) => write!(f, "{p} GPa"),
            StrainLabel::StrainFraction(s) => write!(f, "strain {s}"),
        }
    }
}

/// Full vibronic and spin-orbit parameter set for one strain point.
///
/// Couplings are stored nonnegative: the spectrum does not change under
/// F -> -F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PjtParams {
    pub label: StrainLabel,
    pub f_g: Mev,
    pub f_u: Mev,
    pub hbar_omega: Mev,
    pub lambda: Mev,
    pub xi: Mev,
    pub lambda_u: Option<Ghz>,
    pub lambda_g: Option<Ghz>,
    /// Quadratic coupling constant, zero unless given.
    pub quad_g: Mev,
}

impl PjtParams {
    pub fn new(
        label: StrainLabel,
        f_g: f64,
        f_u: f64,
        hbar_omega: f64,
        lambda: f64,
        xi: f64,
    ) -> Result<Self> {
        let p = PjtParams {
            label,
            f_g: Mev(f_g.abs()),
            f_u: Mev(f_u.abs()),
            hbar_omega: Mev(hbar_omega),
            lambda: Mev(lambda),
            xi: Mev(xi),
            lambda_u: None,
            lambda_g: None,
            quad_g: Mev(0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_spin_orbit(mut self, lambda_u: Ghz, lambda_g: Ghz) -> Self {
        self.lambda_u = Some(lambda_u);
        self.lambda_g = Some(lambda_g);
        self
    }

    /// Recover single-hole spin-orbit parameters from Ham-reduced products,
    /// lambda = (p lambda) / p.
    pub fn with_reduced_spin_orbit(self, pu_lambda_u: Ghz, pg_lambda_g: Ghz, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("reduction factor must be positive, got {p}")));
        }
        Ok(self.with_spin_orbit(Ghz(pu_lambda_u.0 / p), Ghz(pg_lambda_g.0 / p)))
    }

    pub fn with_quadratic(mut self, quad_g: Mev) -> Self {
        self.quad_g = quad_g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f_g.0,
            self.f_u.0,
            self.hbar_omega.0,
            self.lambda.0,
            self.xi.0,
            self.quad_g.0,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation(format!("non-finite parameter at {}", self.label)));
        }
        if !(self.hbar_omega.0 > 0.0) {
            return Err(Error::Validation(format!(
                "hbar_omega must be positive at {}, got {}",
                self.label, self.hbar_omega.0
            )));
        }
        if self.f_g.0 < 0.0 || self.f_u.0 < 0.0 {
            return Err(Error::Validation(format!(
                "couplings must be stored nonnegative at {}",
                self.label
            )));
        }
        Ok(())
    }

    /// Same parameters with both linear couplings multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        let mut p = *self;
        p.f_g = Mev((self.f_g.0 * s).abs());
        p.f_u = Mev((self.f_u.0 * s).abs());
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    PressureGpa,
    StrainFraction,
}

/// (strain, observable) pairs sorted by strain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainSeries {
    pub axis: AxisKind,
    pub y_unit: String,
    points: Vec<(f64, f64)>,
}

impl StrainSeries {
    /// Sorts by x; rejects repeated or non-finite abscissae.
    pub fn new(axis: AxisKind, y_unit: impl Into<String>, mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Validation("series contains non-finite values".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation("series abscissae must be distinct".into()));
        }
        Ok(StrainSeries {
            axis,
            y_unit: y_unit.into(),
            points,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn x_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }

    /// Piecewise-linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.x_range()?;
        if x < lo || x > hi {
            return None;
        }
        let i = self.points.partition_point(|p| p.0 <= x);
        if i == 0 {
            return Some(self.points[0].1);
        }
        if i == self.points.len() {
            return Some(self.points[i - 1].1);
        }
        let (x0, y0) = self.points[i - 1];
        let (x1, y1) = self.points[i];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Reads a two-column CSV with a header line, e.g. `pressure_gpa,energy_ev`.
    pub fn load_csv(path: &Path, axis: AxisKind, y_unit: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(path, 0, "header", e.to_string()))?
            .clone();
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| parse_err(path, row, "record", e.to_string()))?;
            if rec.len() < 2 {
                return Err(parse_err(path, row, "record", "expected two columns".into()));
            }
            let x = parse_field(path, row, &headers[0], &rec[0])?;
            let y = parse_field(path, row, &headers[1], &rec[1])?;
            points.push((x, y));
        }
        StrainSeries::new(axis, y_unit, points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Toml,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => TableFormat::Toml,
            _ => TableFormat::Csv,
        }
    }
}

/// One row of `pjt_params.csv` / one `[[point]]` of the TOML mirror.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ParamRow {
    pressure_gpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strain: Option<f64>,
    f_g_mev: f64,
    f_u_mev: f64,
    hbar_omega_mev: f64,
    lambda_mev: f64,
    xi_mev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_u_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_g_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quad_g_mev: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ParamToml {
    #[serde(default)]
    point: Vec<ParamRow>,
}

pub const PARAM_CSV_COLUMNS: [&str; 9] = [
    "pressure_gpa",
    "f_g_mev",
    "f_u_mev",
    "hbar_omega_mev",
    "lambda_mev",
    "xi_mev",
    "lambda_u_ghz",
    "lambda_g_ghz",
    "quad_g_mev",
];

const REQUIRED_COLUMNS: usize = 6;

pub(crate) fn parse_err(path: &Path, row: usize, column: &str, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    }
}

pub(crate) fn parse_field(path: &Path, row: usize, column: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, row, column, format!("`{raw}`: {e}")))
}

impl ParamRow {
    fn into_params(self, path: &Path, row: usize) -> Result<PjtParams> {
        let label = match (self.pressure_gpa, self.strain) {
            (Some(p), _) => StrainLabel::PressureGpa(p),
            (None, Some(s)) => StrainLabel::StrainFraction(s),
            (None, None) => {
                return Err(parse_err(path, row, "pressure_gpa", "missing strain label".into()))
            }
        };
        let mut p = PjtParams::new(
            label,
            self.f_g_mev,
            self.f_u_mev,
            self.hbar_omega_mev,
            self.lambda_mev,
            self.xi_mev,
        )
        .map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}: row {row}: {m}", path.display())),
            other => other,
        })?;
        p.lambda_u = self.lambda_u_ghz.map(Ghz);
        p.lambda_g = self.lambda_g_ghz.map(Ghz);
        p.quad_g = Mev(self.quad_g_mev.unwrap_or(0.0));
        Ok(p)
    }

    fn from_params(p: &PjtParams) -> Self {
        let (pressure_gpa, strain) = match p.label {
            StrainLabel::PressureGpa(v) => (Some(v), None),
            StrainLabel::StrainFraction(v) => (None, Some(v)),
        };
        ParamRow {
            pressure_gpa,
            strain,
            f_g_mev: p.f_g.0,
            f_u_mev: p.f_u.0,
            hbar_omega_mev: p.hbar_omega.0,
            lambda_mev: p.lambda.0,
            xi_mev: p.xi.0,
            lambda_u_ghz: p.lambda_u.map(|g| g.0),
            lambda_g_ghz: p.lambda_g.map(|g| g.0),
            quad_g_mev: (p.quad_g.0 != 0.0).then_some(p.quad_g.0),
        }
    }
}

pub fn load_param_table(path: &Path, format: TableFormat) -> Result<Vec<PjtParams>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_param_table(&text, path, format)
}

/// Parses table text; `origin` is only used in error messages.
pub fn parse_param_table(text: &str, origin: &Path, format: TableFormat) -> Result<Vec<PjtParams>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    match format {
        TableFormat::Csv => parse_param_csv(text, origin),
        TableFormat::Toml => {
            let doc: ParamToml = toml::from_str(text)
                .map_err(|e| parse_err(origin, 0, "toml", e.message().to_string()))?;
            doc.point
                .into_iter()
                .enumerate()
                .map(|(i, r)| r.into_params(origin, i + 1))
                .collect()
        }
    }
}

fn parse_param_csv(text: &str, path: &Path) -> Result<Vec<PjtParams>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 0, "header", e.to_string()))?
        .clone();
    for (i, expected) in PARAM_CSV_COLUMNS.iter().enumerate().take(headers.len()) {
        if &headers[i] != *expected {
            return Err(parse_err(
                path,
                0,
                &headers[i],
                format!("expected column `{expected}`"),
            ));
        }
    }
    if headers.len() < REQUIRED_COLUMNS {
        return Err(parse_err(
            path,
            0,
            PARAM_CSV_COLUMNS[headers.len()],
            "required column missing".into(),
        ));
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| parse_err(path, row, "record", e.to_string()))?;
        if rec.len() < REQUIRED_COLUMNS {
            return Err(parse_err(
                path,
                row,
                PARAM_CSV_COLUMNS[rec.len()],
                "missing value".into(),
            ));
        }
        let mut values = [None; 9];
        for (j, field) in rec.iter().enumerate().take(PARAM_CSV_COLUMNS.len()) {
            if field.is_empty() && j >= REQUIRED_COLUMNS {
                continue;
            }
            values[j] = Some(parse_field(path, row, PARAM_CSV_COLUMNS[j], field)?);
        }
        let req = |j: usize| {
            values[j].ok_or_else(|| parse_err(path, row, PARAM_CSV_COLUMNS[j], "missing value".into()))
        };
        let r = ParamRow {
            pressure_gpa: Some(req(0)?),
            strain: None,
            f_g_mev: req(1)?,
            f_u_mev: req(2)?,
            hbar_omega_mev: req(3)?,
            lambda_mev: req(4)?,
            xi_mev: req(5)?,
            lambda_u_ghz: values[6],
            lambda_g_ghz: values[7],
            quad_g_mev: values[8],
        };
        out.push(r.into_params(path, row)?);
    }
    Ok(out)
}

/// Serializes a table in the same schema `load_param_table` reads. Values are
/// written with the shortest representation that round-trips exactly.
pub fn write_param_table(params: &[PjtParams], format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Csv => {
            let mut s = PARAM_CSV_COLUMNS.join(",");
            s.push('\n');
            for p in params {
                let label = match p.label {
                    StrainLabel::PressureGpa(v) => v,
                    StrainLabel::StrainFraction(_) => {
                        return Err(Error::Validation(
                            "the CSV schema only carries pressure labels; use TOML".into(),
                        ))
                    }
                };
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    label,
                    p.f_g.0,
                    p.f_u.0,
                    p.hbar_omega.0,
                    p.lambda.0,
                    p.xi.0,
                    opt(p.lambda_u.map(|g| g.0)),
                    opt(p.lambda_g.map(|g| g.0)),
                    opt((p.quad_g.0 != 0.0).then_some(p.quad_g.0)),
                ));
            }
            Ok(s)
        }
        TableFormat::Toml => {
            let doc = ParamToml {
                point: params.iter().map(ParamRow::from_params).collect(),
            };
            toml::to_string(&doc).map_err(|e| Error::Validation(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hbar2_over_amu_angstrom2() {
        // hbar^2 / (amu A^2) from the exact Planck constant, in joules.
        let hbar = 6.626_070_15e-34 / std::f64::consts::TAU;
        let joules = hbar * hbar / 1.660_539_066_60e-47;
        let mev = joules / 1.602_176_634e-22;
        assert_relative_eq!(CONSTANTS.hbar2_over_amu_a2, mev, max_relative = 1e-9);
        assert!((CONSTANTS.hbar2_over_amu_a2 - 4.1802).abs() < 5e-5);
    }

    #[test]
    fn oscillator_length_values() {
        let l = oscillator_length(Mev(CONSTANTS.hbar2_over_amu_a2)).unwrap();
        assert_relative_eq!(l, 1.0, max_relative = 1e-15);
        let l = oscillator_length(Mev(77.39)).unwrap();
        assert!((l - 0.2324).abs() < 5e-5, "{l}");
        assert!(oscillator_length(Mev(0.0)).is_err());
        assert!(oscillator_length(Mev(-3.0)).is_err());
    }

    #[test]
    fn oscillator_length_decreasing() {
        let ls: Vec<f64> = (1..200)
            .map(|i| oscillator_length(Mev(i as f64 * 0.7)).unwrap())
            .collect();
        assert!(ls.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn energy_frequency_values() {
        // 1 meV / h = 1.602176634e-22 / 6.62607015e-34 Hz
        assert_relative_eq!(energy_to_frequency(Mev(1.0)).0, 241.798_924_2, max_relative = 1e-9);
        assert_eq!(energy_to_frequency(Mev(0.0)).0, 0.0);
        assert!((energy_to_frequency(Mev(0.09277)).0 - 22.43).abs() < 0.005);
        assert!(energy_to_frequency(Mev(-2.0)).0 < 0.0);
    }

    #[test]
    fn parses_csv_row() {
        let text = "pressure_gpa,f_g_mev,f_u_mev,hbar_omega_mev,lambda_mev,xi_mev\n0.00,103.96,95.61,77.39,81.94,52.52\n";
        let ps = parse_param_table(text, Path::new("t.csv"), TableFormat::Csv).unwrap();
        assert_eq!(ps.len(), 1);
        let p = &ps[0];
        assert_eq!(p.label, StrainLabel::PressureGpa(0.0));
        assert_eq!((p.f_g.0, p.f_u.0, p.hbar_omega.0), (103.96, 95.61, 77.39));
        assert_eq!((p.lambda.0, p.xi.0), (81.94, 52.52));
        assert_eq!(p.quad_g.0, 0.0);
        assert!(p.lambda_u.is_none());
    }

    #[test]
    fn empty_table_is_empty() {
        let ps = parse_param_table("", Path::new("e.csv"), TableFormat::Csv).unwrap();
        assert!(ps.is_empty());
        let ps = parse_param_table("\n", Path::new("e.toml"), TableFormat::Toml).unwrap();
        assert!(ps.is_empty());
    }

    #[test]
    fn rejects_zero_phonon_energy() {
        let text = "pressure_gpa,f_g_mev,f_u_mev,hbar_omega_mev,lambda_mev,xi_mev\n0,1,1,0,1,1\n";
        let err = parse_param_table(text, Path::new("z.csv"), TableFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_cell_names_row_and_column() {
        let text = "pressure_gpa,f_g_mev,f_u_mev,hbar_omega_mev,lambda_mev,xi_mev\n0,1,1,70,1,1\n5,1,abc,70,1,1\n";
        match parse_param_table(text, Path::new("m.csv"), TableFormat::Csv).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "f_u_mev");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn negative_couplings_are_canonicalized() {
        let p = PjtParams::new(StrainLabel::PressureGpa(0.0), -10.0, -3.0, 70.0, 1.0, 1.0).unwrap();
        assert_eq!((p.f_g.0, p.f_u.0), (10.0, 3.0));
    }

    #[test]
    fn optional_columns_and_toml_mirror() {
        let text = "pressure_gpa,f_g_mev,f_u_mev,hbar_omega_mev,lambda_mev,xi_mev,lambda_u_ghz,lambda_g_ghz,quad_g_mev\n\
                    0,103.96,95.61,77.39,81.94,52.52,1897.5,187.5,\n\
                    180,92.2,92.2,81.32,80.27,54.03,,,0.5\n";
        let ps = parse_param_table(text, Path::new("o.csv"), TableFormat::Csv).unwrap();
        assert_eq!(ps[0].lambda_u, Some(Ghz(1897.5)));
        assert_eq!(ps[0].quad_g.0, 0.0);
        assert_eq!(ps[1].lambda_u, None);
        assert_eq!(ps[1].quad_g.0, 0.5);

        let toml_text = write_param_table(&ps, TableFormat::Toml).unwrap();
        assert!(toml_text.contains("[[point]]"));
        let back = parse_param_table(&toml_text, Path::new("o.toml"), TableFormat::Toml).unwrap();
        assert_eq!(back, ps);
        let csv_text = write_param_table(&ps, TableFormat::Csv).unwrap();
        let back = parse_param_table(&csv_text, Path::new("o.csv"), TableFormat::Csv).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn reduced_spin_orbit_reconstruction() {
        let p = PjtParams::new(StrainLabel::PressureGpa(0.0), 1.0, 1.0, 70.0, 1.0, 1.0)
            .unwrap()
            .with_reduced_spin_orbit(Ghz(22.77), Ghz(2.25), 0.012)
            .unwrap();
        assert_relative_eq!(p.lambda_u.unwrap().0, 1897.5, max_relative = 1e-12);
        assert_relative_eq!(p.lambda_g.unwrap().0, 187.5, max_relative = 1e-12);
    }

    #[test]
    fn series_sorting_and_interpolation() {
        let s = StrainSeries::new(AxisKind::PressureGpa, "eV", vec![(2.0, 4.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(s.points()[0], (0.0, 0.0));
        assert_eq!(s.interpolate(1.5), Some(2.5));
        assert_eq!(s.interpolate(3.0), None);
        assert!(StrainSeries::new(AxisKind::PressureGpa, "eV", vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn frequency_round_trip(e in -1e6f64..1e6) {
                let back = frequency_to_energy(energy_to_frequency(Mev(e))).0;
                prop_assert!((back - e).abs() <= 1e-12 * e.abs().max(1e-300));
            }

            #[test]
            fn csv_round_trip_is_bit_exact(
                vals in proptest::collection::vec((-200.0f64..200.0, 0.0f64..200.0, 0.0f64..200.0, 1.0f64..200.0, -100.0f64..100.0, -100.0f64..100.0), 0..8)
            ) {
                let ps: Vec<PjtParams> = vals.iter().map(|&(x, fg, fu, w, l, xi)| {
                    PjtParams::new(StrainLabel::PressureGpa(x), fg, fu, w, l, xi).unwrap()
                }).collect();
                let text = write_param_table(&ps, TableFormat::Csv).unwrap();
                let back = parse_param_table(&text, Path::new("p.csv"), TableFormat::Csv).unwrap();
                prop_assert_eq!(back, ps);
            }
        }
    }
}
