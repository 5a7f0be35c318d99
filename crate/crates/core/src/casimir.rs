//! Lateral Casimir force amplitude for a corrugated cylinder facing a
//! corrugated plate, in the proximity force approximation:
//!
//! ```text
//! F = π √2 ħc a₁ a₂ L R^{1/2} / (λ H^{9/2}) · ∫₁^∞ ds s⁻⁵ (s-1)^{-1/2} J(H s / λ)
//! ```
//!
//! The coupling function `J` is injected as a [`ForceKernel`]. The integral is
//! evaluated after substituting `s = 1 + t²`, which removes the endpoint
//! singularity, over geometrically growing `t` intervals until a tail bound
//! drops below `1e-12` of the accumulated value.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature;

/// ħc in J·m (CODATA ħ times the exact speed of light).
pub const HBAR_C: f64 = 1.054_571_817e-34 * 299_792_458.0;

pub const KERNEL_TABLE_HEADER: &str = "kernel-table v1";
const MIN_TABLE_POINTS: usize = 8;
const QUAD_REL_TOL: f64 = 1.0e-10;
const TAIL_REL_TOL: f64 = 1.0e-12;
const MAX_TAIL_DOUBLINGS: usize = 64;
const CORRUGATION_RATIO_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RackPinionGeometry {
    pub pinion_length: f64,
    pub pinion_radius: f64,
    pub pinion_amplitude: f64,
    pub rack_amplitude: f64,
    pub wavelength: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidityWarning {
    /// Corrugation amplitude not small against the gap.
    CorrugationNotSmall { surface: String, ratio: f64 },
    /// Proximity approximation is only reasonable for `H < R`.
    GapNotBelowRadius { gap: f64, radius: f64 },
}

impl fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidityWarning::CorrugationNotSmall { surface, ratio } => write!(
                f,
                "{surface} corrugation amplitude is {ratio:.3} of the gap (want << 1)"
            ),
            ValidityWarning::GapNotBelowRadius { gap, radius } => write!(
                f,
                "gap {gap:e} m is not below the pinion radius {radius:e} m; PFA is unreliable"
            ),
        }
    }
}

impl RackPinionGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("pinion_length", self.pinion_length),
            ("pinion_radius", self.pinion_radius),
            ("pinion_amplitude", self.pinion_amplitude),
            ("rack_amplitude", self.rack_amplitude),
            ("wavelength", self.wavelength),
            ("gap", self.gap),
        ] {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<ValidityWarning> {
        let mut out = Vec::new();
        for (surface, a) in [
            ("pinion", self.pinion_amplitude),
            ("rack", self.rack_amplitude),
        ] {
            let ratio = a / self.gap;
            if ratio > CORRUGATION_RATIO_WARN {
                out.push(ValidityWarning::CorrugationNotSmall {
                    surface: surface.to_string(),
                    ratio,
                });
            }
        }
        if self.gap >= self.pinion_radius {
            out.push(ValidityWarning::GapNotBelowRadius {
                gap: self.gap,
                radius: self.pinion_radius,
            });
        }
        out
    }

    /// `π √2 ħc a₁ a₂ L R^{1/2} / (λ H^{9/2})`.
    pub fn prefactor(&self) -> f64 {
        PI * SQRT_2
            * HBAR_C
            * self.pinion_amplitude
            * self.rack_amplitude
            * self.pinion_length
            * self.pinion_radius.sqrt()
            / (self.wavelength * self.gap.powf(4.5))
    }
}

/// Coupling function `u ↦ J(u)`, immutable and shareable across threads.
#[derive(Clone)]
pub struct ForceKernel {
    pub name: String,
    pub provenance: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ForceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceKernel")
            .field("name", &self.name)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ForceKernel {
    pub fn new(
        name: impl Into<String>,
        provenance: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ForceKernel {
            name: name.into(),
            provenance: provenance.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    fn checked(&self, u: f64) -> Result<f64> {
        let j = self.eval(u);
        if !j.is_finite() || j < 0.0 {
            return Err(Error::Quadrature(format!(
                "kernel `{}` returned {j} at u = {u}; must be finite and nonnegative",
                self.name
            )));
        }
        Ok(j)
    }

    /// `J ≡ 1`.
    pub fn unit() -> Self {
        ForceKernel::new("unit", "builtin: J(u) = 1", |_| 1.0)
    }

    /// `J(u) = (1 + 2πu) e^{-2πu}`: finite at zero with an exponential tail
    /// on the scale of one wavelength. Qualitative stand-in only.
    pub fn toy() -> Self {
        ForceKernel::new("toy", "builtin: J(u) = (1 + 2 pi u) exp(-2 pi u)", |u| {
            (1.0 + TAU * u) * (-TAU * u).exp()
        })
    }

    /// `J(u) = e^{-2πu}`.
    pub fn exponential() -> Self {
        ForceKernel::new("exponential", "builtin: J(u) = exp(-2 pi u)", |u| {
            (-TAU * u).exp()
        })
    }

    pub fn builtin(name: &str) -> Option<Self> {
        builtin_kernels().into_iter().find(|k| k.name == name)
    }
}

pub fn builtin_kernels() -> Vec<ForceKernel> {
    vec![
        ForceKernel::unit(),
        ForceKernel::toy(),
        ForceKernel::exponential(),
    ]
}

/// `∫₁^∞ s^{-power} (s-1)^{-1/2} J(scale · s) ds` with `s = 1 + t²`.
///
/// The tail bound assumes `J` is nonincreasing beyond the truncation point.
pub fn pfa_integral(kernel: &ForceKernel, scale: f64, power: f64) -> Result<f64> {
    ensure_finite("scale", scale)?;
    if !(power > 0.5) || !power.is_finite() {
        return Err(Error::invalid("power", "must exceed 1/2"));
    }
    let integrand = |t: f64| -> Result<f64> {
        let s = 1.0 + t * t;
        Ok(2.0 * s.powf(-power) * kernel.checked(scale * s)?)
    };
    let mut total = 0.0;
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..MAX_TAIL_DOUBLINGS {
        let piece = quadrature::integrate(integrand, a, b, 0.0, QUAD_REL_TOL, 2000)?;
        total += piece.value;
        // (1 + t²)^{-p} <= t^{-2p} and J(scale (1 + t²)) <= J at the cut
        let j_cut = kernel.checked(scale * (1.0 + b * b))?;
        let tail = 2.0 * j_cut * b.powf(1.0 - 2.0 * power) / (2.0 * power - 1.0);
        if tail <= TAIL_REL_TOL * total.abs() || (total == 0.0 && tail == 0.0) {
            return Ok(total);
        }
        a = b;
        b *= 2.0;
    }
    Err(Error::Quadrature(format!(
        "kernel `{}` does not decay within the truncation budget",
        kernel.name
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceResult {
    /// Amplitude `F` of the lateral force, in newtons.
    pub force: f64,
    /// Value of the dimensionless integral.
    pub integral: f64,
    pub warnings: Vec<ValidityWarning>,
}

pub fn force_amplitude(g: &RackPinionGeometry, k: &ForceKernel) -> Result<ForceResult> {
    g.validate()?;
    let warnings = g.warnings();
    for w in &warnings {
        log::warn!("{w}");
    }
    let integral = pfa_integral(k, g.gap / g.wavelength, 5.0)?;
    Ok(ForceResult {
        force: g.prefactor() * integral,
        integral,
        warnings,
    })
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant of `(u, J)` samples
/// with an exponential tail fitted over the last decade of `u`.
#[derive(Debug, Clone)]
struct TabulatedKernel {
    u: Vec<f64>,
    j: Vec<f64>,
    slopes: Vec<f64>,
    tail_rate: f64,
}

impl TabulatedKernel {
    fn new(u: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if u.len() != j.len() {
            return Err(Error::KernelTable("column lengths differ".into()));
        }
        if u.len() < MIN_TABLE_POINTS {
            return Err(Error::KernelTable(format!(
                "need at least {MIN_TABLE_POINTS} points, got {}",
                u.len()
            )));
        }
        if u[0] != 0.0 {
            return Err(Error::KernelTable(format!(
                "table must start at u = 0, starts at {}",
                u[0]
            )));
        }
        for (k, (&x, &y)) in u.iter().zip(&j).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::KernelTable(format!("non-finite entry at row {k}")));
            }
            if y < 0.0 {
                return Err(Error::KernelTable(format!("negative J = {y} at u = {x}")));
            }
            if k > 0 && x <= u[k - 1] {
                return Err(Error::KernelTable(format!(
                    "u not strictly increasing at row {k}"
                )));
            }
        }
        let slopes = pchip_slopes(&u, &j);
        let tail_rate = fit_tail(&u, &j)?;
        Ok(TabulatedKernel {
            u,
            j,
            slopes,
            tail_rate,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        let last = self.u.len() - 1;
        if x <= 0.0 {
            return self.j[0];
        }
        if x >= self.u[last] {
            return self.j[last] * (self.tail_rate * (x - self.u[last])).exp();
        }
        let k = self.u.partition_point(|&v| v <= x) - 1;
        let h = self.u[k + 1] - self.u[k];
        let t = (x - self.u[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.j[k]
            + h10 * h * self.slopes[k]
            + h01 * self.j[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Shape-preserving three-point end slope.
fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Least-squares decay rate of `ln J` over `u ∈ [u_max/10, u_max]`, clamped to
/// be non-positive. Returns `-inf` when the tail already vanishes.
fn fit_tail(u: &[f64], j: &[f64]) -> Result<f64> {
    let u_max = *u.last().unwrap();
    let pts: Vec<(f64, f64)> = u
        .iter()
        .zip(j)
        .filter(|(&x, _)| x >= 0.1 * u_max)
        .map(|(&x, &y)| (x, y))
        .collect();
    if pts.iter().any(|&(_, y)| y == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    if pts.len() < 2 {
        return Err(Error::KernelTable(
            "last decade needs at least two points".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let rate = sxy / sxx;
    if rate > 1e-9 {
        return Err(Error::KernelTable(format!(
            "tail grows (fitted rate {rate:e}); kernel must decay"
        )));
    }
    Ok(rate.min(0.0))
}

/// Kernel from in-memory `(u, J)` samples. The digest covers the samples' bits.
pub fn load_tabulated_kernel(table: &[(f64, f64)]) -> Result<ForceKernel> {
    let mut hasher = Sha256::new();
    for (u, j) in table {
        hasher.update(u.to_le_bytes());
        hasher.update(j.to_le_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    build_tabulated("table", table, format!("samples sha256:{digest}"))
}

fn build_tabulated(name: &str, table: &[(f64, f64)], provenance: String) -> Result<ForceKernel> {
    let (u, j): (Vec<f64>, Vec<f64>) = table.iter().copied().unzip();
    let kernel = TabulatedKernel::new(u, j)?;
    Ok(ForceKernel::new(name, provenance, move |x| kernel.eval(x)))
}

/// Parses the `kernel-table v1` text format: the header line, then two numeric
/// columns `u J` per line; `#` starts a comment.
pub fn parse_kernel_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, header)) if header == KERNEL_TABLE_HEADER => {}
        other => {
            return Err(Error::KernelTable(format!(
                "expected header `{KERNEL_TABLE_HEADER}`, found {:?}",
                other.map(|(_, l)| l)
            )))
        }
    }
    lines
        .map(|(lineno, line)| {
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|c| !c.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::KernelTable(format!(
                    "line {}: expected two columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::KernelTable(format!("line {}: {e}", lineno + 1)))
            };
            Ok((parse(cols[0])?, parse(cols[1])?))
        })
        .collect()
}

/// Loads a `kernel-table v1` file; the kernel records the file's SHA-256.
pub fn load_kernel_file(path: &Path) -> Result<ForceKernel> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| Error::KernelTable(format!("{}: {e}", path.display())))?;
    let table = parse_kernel_table(&text)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    build_tabulated(
        &path.display().to_string(),
        &table,
        format!("file {} sha256:{digest}", path.display()),
    )
}

/// Renders samples in the `kernel-table v1` format.
pub fn format_kernel_table(table: &[(f64, f64)]) -> String {
    let mut out = String::from(KERNEL_TABLE_HEADER);
    out.push_str("\n# u J(u)\n");
    for (u, j) in table {
        out.push_str(&format!("{u:.17e} {j:.17e}\n"));
    }
    out
}

/// Parses a length such as `"10 nm"`, `"0.2um"`, `"1.5 µm"` or `"3e-7 m"` into metres.
pub fn parse_length(text: &str) -> Result<f64> {
    let t = text.trim();
    const UNITS: [(&str, f64); 7] = [
        ("mm", 1e-3),
        ("um", 1e-6),
        ("µm", 1e-6),
        ("μm", 1e-6),
        ("nm", 1e-9),
        ("pm", 1e-12),
        ("m", 1.0),
    ];
    let (number, scale) = UNITS
        .iter()
        .find_map(|&(suffix, scale)| t.strip_suffix(suffix).map(|n| (n, scale)))
        .unwrap_or((t, 1.0));
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::invalid("length", format!("cannot parse `{text}`")))?;
    Ok(value * scale)
}
