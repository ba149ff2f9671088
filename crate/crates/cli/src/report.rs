//! Report records and their JSON/CSV encodings.

use std::io::Write;

use ptflab::randomized::EstimatorResult;
use serde::Serialize;

use crate::error::CliError;

/// A number labeled with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Measured {
    Enumeration {
        value: f64,
    },
    Formula {
        value: f64,
    },
    MonteCarlo {
        value: f64,
        std_error: f64,
        ci95: [f64; 2],
        samples: u64,
        seed: u64,
        stream: u64,
    },
}

impl Measured {
    pub fn exact(value: f64) -> Self {
        Measured::Enumeration { value }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Measured::Enumeration { value } | Measured::Formula { value } | Measured::MonteCarlo { value, .. } => value,
        }
    }

    pub fn method(&self) -> &'static str {
        match self {
            Measured::Enumeration { .. } => "enumeration",
            Measured::Formula { .. } => "formula",
            Measured::MonteCarlo { .. } => "monte_carlo",
        }
    }

    fn provenance(&self) -> (Option<f64>, Option<u64>, Option<u64>) {
        match *self {
            Measured::MonteCarlo {
                std_error,
                samples,
                seed,
                ..
            } => (Some(std_error), Some(samples), Some(seed)),
            _ => (None, None, None),
        }
    }
}

impl From<EstimatorResult> for Measured {
    fn from(r: EstimatorResult) -> Self {
        Measured::MonteCarlo {
            value: r.estimate,
            std_error: r.std_error,
            ci95: r.ci95,
            samples: r.samples,
            seed: r.seed,
            stream: r.stream,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolynomialMeta {
    pub n: usize,
    pub degree: usize,
    pub terms: usize,
    pub source: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoisePoint {
    pub delta: f64,
    #[serde(flatten)]
    pub value: Measured,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundValue {
    pub value: f64,
    /// `as / bound` when `as` is known.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremBoundValue {
    pub value: f64,
    pub c_log: f64,
    pub c_exp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// An algebraic identity; failure exits with code 4.
    Identity,
    /// An inequality or calibration; failure exits with code 1.
    Hard,
    /// Recorded only.
    Observational,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Identity => "identity",
            CheckKind::Hard => "hard",
            CheckKind::Observational => "observational",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub instance: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub measured: f64,
    pub bound: Option<f64>,
    pub method: String,
    pub detail: String,
}

impl CheckRow {
    pub const CSV_HEADER: [&'static str; 9] =
        ["suite", "check", "instance", "kind", "passed", "measured", "bound", "method", "detail"];

    fn csv_record(&self) -> [String; 9] {
        [
            self.suite.clone(),
            self.check.clone(),
            self.instance.clone(),
            self.kind.as_str().to_string(),
            self.passed.to_string(),
            self.measured.to_string(),
            self.bound.map(|b| b.to_string()).unwrap_or_default(),
            self.method.clone(),
            self.detail.clone(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub identity_failed: usize,
    pub hard_failed: usize,
    pub observational: usize,
}

impl Summary {
    pub fn of(rows: &[CheckRow]) -> Self {
        let failed = |k: CheckKind| rows.iter().filter(|r| r.kind == k && !r.passed).count();
        Self {
            rows: rows.len(),
            identity_failed: failed(CheckKind::Identity),
            hard_failed: failed(CheckKind::Hard),
            observational: rows.iter().filter(|r| r.kind == CheckKind::Observational).count(),
        }
    }

    /// 4 for a failed identity, 1 for another failed hard check, else 0.
    pub fn exit_code(&self) -> u8 {
        if self.identity_failed > 0 {
            4
        } else if self.hard_failed > 0 {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub polynomial: PolynomialMeta,
    pub average_sensitivity: Option<Measured>,
    pub noise_sensitivity: Vec<NoisePoint>,
    /// Influences of `sgn p`.
    pub influences: Option<Vec<f64>>,
    /// Influences of `p` itself, from its coefficients.
    pub polynomial_influences: Vec<f64>,
    pub variance: f64,
    pub regularity: Option<f64>,
    pub alpha: Option<Measured>,
    pub gl_bound: Option<BoundValue>,
    pub theorem_bound: Option<TheoremBoundValue>,
    pub checks: Vec<CheckRow>,
    pub summary: Summary,
}

impl SensitivityReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["field", "value", "method", "std_error", "samples", "seed"])?;
        let mut put = |field: String, m: &Measured| -> Result<(), CliError> {
            let (se, samples, seed) = m.provenance();
            out.write_record([
                field,
                m.value().to_string(),
                m.method().to_string(),
                se.map(|v| v.to_string()).unwrap_or_default(),
                samples.map(|v| v.to_string()).unwrap_or_default(),
                seed.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
            Ok(())
        };
        let meta = &self.polynomial;
        put("n".into(), &Measured::Formula { value: meta.n as f64 })?;
        put("degree".into(), &Measured::Formula { value: meta.degree as f64 })?;
        put("terms".into(), &Measured::Formula { value: meta.terms as f64 })?;
        if let Some(m) = &self.average_sensitivity {
            put("average_sensitivity".into(), m)?;
        }
        for ns in &self.noise_sensitivity {
            put(format!("noise_sensitivity[{}]", ns.delta), &ns.value)?;
        }
        if let Some(inf) = &self.influences {
            for (i, &v) in inf.iter().enumerate() {
                put(format!("influence[{i}]"), &Measured::exact(v))?;
            }
        }
        put("variance".into(), &Measured::Formula { value: self.variance })?;
        if let Some(r) = self.regularity {
            put("regularity".into(), &Measured::Formula { value: r })?;
        }
        if let Some(m) = &self.alpha {
            put("alpha".into(), m)?;
        }
        if let Some(g) = &self.gl_bound {
            put("gl_bound".into(), &Measured::Formula { value: g.value })?;
            if let Some(r) = g.ratio {
                put("gl_ratio".into(), &Measured::Formula { value: r })?;
            }
        }
        if let Some(t) = &self.theorem_bound {
            put("theorem_bound".into(), &Measured::Formula { value: t.value })?;
        }
        for c in &self.checks {
            put(format!("check:{}", c.check), &Measured::Formula { value: f64::from(u8::from(c.passed)) })?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bundle {
    pub suite: String,
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub rows: Vec<CheckRow>,
    pub summary: Summary,
}

pub fn write_rows_csv<W: Write>(rows: &[CheckRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CheckRow::CSV_HEADER)?;
    for r in rows {
        out.write_record(r.csv_record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut w: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.into()))?;
    w.write_all(b"\n")?;
    Ok(())
}
