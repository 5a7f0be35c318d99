//! Grid serialization.
//!
//! CSV: three `#` lines (format tag, JSON spec, JSON metadata), a header row
//! naming both axes followed by `class,m,n,sign,residual,...`, then one row
//! per cell in row-major order (all second-axis values of the first row,
//! then the next row). Floats are written with 17 significant digits.
//!
//! JSON: `{ "spec", "metadata", "raster" }` with the raster as nested arrays
//! indexed `[i][j]`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::OrbitClass;
use crate::sweep::{CellResult, GridResult, GridSpec, RunMetadata};

pub const CSV_TAG: &str = "# rackpinion-grid v1";
const CELL_COLUMNS: [&str; 11] = [
    "class",
    "m",
    "n",
    "sign",
    "residual",
    "period",
    "mean_velocity",
    "delta",
    "identity_residual",
    "lyapunov",
    "failed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridFormat {
    Csv,
    Json,
}

impl GridFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(GridFormat::Csv),
            "json" => Some(GridFormat::Json),
            _ => None,
        }
    }
}

impl std::str::FromStr for GridFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(GridFormat::Csv),
            "json" => Ok(GridFormat::Json),
            other => Err(Error::invalid(
                "format",
                format!("expected csv or json, got `{other}`"),
            )),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridDocument {
    spec: GridSpec,
    metadata: RunMetadata,
    raster: Vec<Vec<CellResult>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_grid<W: Write>(result: &GridResult, format: GridFormat, mut out: W) -> Result<()> {
    let (nx, ny) = result.dims();
    if result.cells.len() != nx * ny {
        return Err(Error::Grid(format!(
            "raster has {} cells, spec needs {}",
            result.cells.len(),
            nx * ny
        )));
    }
    match format {
        GridFormat::Json => {
            let doc = GridDocument {
                spec: result.spec.clone(),
                metadata: result.metadata.clone(),
                raster: result.cells.chunks(ny).map(|row| row.to_vec()).collect(),
            };
            serde_json::to_writer_pretty(&mut out, &doc)
                .map_err(|e| Error::Format(e.to_string()))?;
            writeln!(out)?;
        }
        GridFormat::Csv => {
            writeln!(out, "{CSV_TAG}")?;
            writeln!(out, "# spec {}", to_json(&result.spec)?)?;
            writeln!(out, "# metadata {}", to_json(&result.metadata)?)?;
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec![result.spec.x.name.as_str(), result.spec.y.name.as_str()];
            header.extend(CELL_COLUMNS);
            w.write_record(&header).map_err(csv_err)?;
            for ((x, y), c) in result.coordinates().into_iter().zip(&result.cells) {
                let (m, n, sign) = c.class.triple();
                w.write_record([
                    fmt_f64(x),
                    fmt_f64(y),
                    c.class.name().to_string(),
                    m.to_string(),
                    n.to_string(),
                    sign.to_string(),
                    fmt_f64(c.residual),
                    c.period.to_string(),
                    fmt_f64(c.mean_velocity),
                    fmt_f64(c.delta),
                    fmt_f64(c.identity_residual),
                    c.lyapunov.map(fmt_f64).unwrap_or_default(),
                    c.failed.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_grid<R: Read>(input: R, format: GridFormat) -> Result<GridResult> {
    let result = match format {
        GridFormat::Json => {
            let doc: GridDocument =
                serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))?;
            GridResult {
                spec: doc.spec,
                metadata: doc.metadata,
                cells: doc.raster.into_iter().flatten().collect(),
            }
        }
        GridFormat::Csv => read_csv(input)?,
    };
    let (nx, ny) = result.spec.dims()?;
    if result.cells.len() != nx * ny {
        return Err(Error::Format(format!(
            "raster has {} cells, spec needs {nx}x{ny}",
            result.cells.len()
        )));
    }
    Ok(result)
}

fn read_csv<R: Read>(input: R) -> Result<GridResult> {
    let mut reader = BufReader::new(input);
    let mut preamble = |prefix: &str| -> Result<String> {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        line.strip_prefix(prefix)
            .map(str::to_string)
            .ok_or_else(|| Error::Format(format!("expected `{prefix}...`, found `{line}`")))
    };
    preamble(CSV_TAG)?;
    let spec: GridSpec = serde_json::from_str(&preamble("# spec ")?)
        .map_err(|e| Error::Format(format!("spec: {e}")))?;
    let metadata: RunMetadata = serde_json::from_str(&preamble("# metadata ")?)
        .map_err(|e| Error::Format(format!("metadata: {e}")))?;

    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let expected: Vec<&str> = [spec.x.name.as_str(), spec.y.name.as_str()]
        .into_iter()
        .chain(CELL_COLUMNS)
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("{what} `{s}`: {e}")))
    };
    let int = |s: &str, what: &str| -> Result<i64> {
        s.parse::<i64>()
            .map_err(|e| Error::Format(format!("{what} `{s}`: {e}")))
    };
    let mut cells = Vec::new();
    for record in rdr.records() {
        let r = record.map_err(csv_err)?;
        let class = OrbitClass::from_parts(
            &r[2],
            int(&r[3], "m")? as u32,
            int(&r[4], "n")? as u32,
            int(&r[5], "sign")? as i8,
        )?;
        cells.push(CellResult {
            class,
            residual: num(&r[6], "residual")?,
            period: int(&r[7], "period")? as u32,
            mean_velocity: num(&r[8], "mean_velocity")?,
            delta: num(&r[9], "delta")?,
            identity_residual: num(&r[10], "identity_residual")?,
            lyapunov: if r[11].is_empty() {
                None
            } else {
                Some(num(&r[11], "lyapunov")?)
            },
            failed: r[12]
                .parse()
                .map_err(|_| Error::Format(format!("failed `{}`", &r[12])))?,
        });
    }
    Ok(GridResult {
        spec,
        cells,
        metadata,
    })
}

pub fn write_grid_file(result: &GridResult, path: &Path, format: GridFormat) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_grid(result, format, std::io::BufWriter::new(file))
}

pub fn read_grid_file(path: &Path, format: GridFormat) -> Result<GridResult> {
    read_grid(std::fs::File::open(path)?, format)
}
