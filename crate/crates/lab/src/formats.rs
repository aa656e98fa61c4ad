//! JSON shapes of riggings, reports, bases and convergence tables.

use std::fmt;

use gk_core::approx::ConvergenceTable;
use gk_core::basis::MBasis;
use gk_core::report::{Assertion, Measurement};
use gk_core::{make_rigging, BanachNorm, DMatrix, PropertyReport, Rigging};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A float that round-trips through JSON even when it is not finite
/// (`"inf"`, `"-inf"`, `"nan"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "+inf" => Ok(Num(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(Num(f64::NEG_INFINITY)),
                    "nan" => Ok(Num(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().map(|x| Num(*x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    P,
    WeightedP,
    SupGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub kind: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl NormSpec {
    pub fn from_norm(b: &BanachNorm) -> Self {
        match b {
            BanachNorm::P(p) => NormSpec {
                kind: NormKind::P,
                p: Some(Num(*p)),
                weights: None,
            },
            BanachNorm::WeightedP { p, weights } => NormSpec {
                kind: NormKind::WeightedP,
                p: Some(Num(*p)),
                weights: Some(weights.clone()),
            },
            BanachNorm::SupGrid => NormSpec {
                kind: NormKind::SupGrid,
                p: None,
                weights: None,
            },
        }
    }

    pub fn to_norm(&self) -> Result<BanachNorm, String> {
        let p = || self.p.map(|v| v.0).ok_or_else(|| "b_norm.p is required".to_string());
        match self.kind {
            NormKind::P => Ok(BanachNorm::P(p()?)),
            NormKind::WeightedP => Ok(BanachNorm::WeightedP {
                p: p()?,
                weights: self.weights.clone().ok_or("b_norm.weights is required")?,
            }),
            NormKind::SupGrid => Ok(BanachNorm::SupGrid),
        }
    }
}

/// Rigging file format. Diagonal `w2`/`t12` are stored as their diagonals,
/// anything else row-major with `n²` entries. Without `c_scale` the embedding
/// constants are recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiggingSpec {
    pub n: usize,
    pub b_norm: NormSpec,
    pub w2: Vec<f64>,
    pub t12: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_scale: Option<[f64; 2]>,
}

fn pack(m: &DMatrix<f64>, diagonal: bool) -> Vec<f64> {
    if diagonal {
        m.diagonal().iter().copied().collect()
    } else {
        m.transpose().iter().copied().collect()
    }
}

fn unpack(v: &[f64], n: usize, what: &str) -> Result<DMatrix<f64>, String> {
    if v.len() == n {
        Ok(DMatrix::from_diagonal(&gk_core::DVector::from_row_slice(v)))
    } else if v.len() == n * n {
        Ok(DMatrix::from_row_slice(n, n, v))
    } else {
        Err(format!("{what} needs {n} or {} entries, got {}", n * n, v.len()))
    }
}

impl RiggingSpec {
    pub fn from_rigging(r: &Rigging) -> Self {
        let (c1, c2) = r.c_scale();
        RiggingSpec {
            n: r.n(),
            b_norm: NormSpec::from_norm(r.b_norm()),
            w2: pack(r.w2_raw(), r.is_diagonal()),
            t12: pack(r.t12(), r.is_diagonal()),
            c_scale: Some([c1, c2]),
        }
    }

    pub fn build(&self) -> Result<Rigging, String> {
        let b = self.b_norm.to_norm()?;
        let w2 = unpack(&self.w2, self.n, "w2")?;
        let t12 = unpack(&self.t12, self.n, "t12")?;
        let r = match self.c_scale {
            Some([c1, c2]) => Rigging::from_parts(self.n, b, w2, t12, (c1, c2)),
            None => make_rigging(self.n, b, w2, t12),
        };
        r.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionJson {
    pub prop: String,
    pub pass: bool,
    pub defect: Num,
    pub witness: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementJson {
    pub quantity: String,
    pub value: Num,
    pub witness: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportJson {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub asserted: Vec<AssertionJson>,
    pub measured: Vec<MeasurementJson>,
}

impl From<&Assertion> for AssertionJson {
    fn from(a: &Assertion) -> Self {
        AssertionJson {
            prop: a.prop.clone(),
            pass: a.pass,
            defect: Num(a.defect),
            witness: nums(&a.witness),
        }
    }
}

impl From<&Measurement> for MeasurementJson {
    fn from(m: &Measurement) -> Self {
        MeasurementJson {
            quantity: m.quantity.clone(),
            value: Num(m.value),
            witness: nums(&m.witness),
        }
    }
}

impl From<&PropertyReport> for ReportJson {
    fn from(r: &PropertyReport) -> Self {
        ReportJson {
            name: r.name.clone(),
            seed: r.seed,
            trials: r.trials,
            asserted: r.asserted.iter().map(AssertionJson::from).collect(),
            measured: r.measured.iter().map(MeasurementJson::from).collect(),
        }
    }
}

/// Vectors as a list of columns, functionals as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisJson {
    pub vectors: Vec<Vec<f64>>,
    pub functionals: Vec<Vec<f64>>,
}

impl From<&MBasis<'_>> for BasisJson {
    fn from(b: &MBasis<'_>) -> Self {
        BasisJson {
            vectors: b.vectors.column_iter().map(|c| c.iter().copied().collect()).collect(),
            functionals: b.functionals.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowJson {
    pub lambda: Num,
    pub approx_err: Num,
    pub t: Num,
    pub semigroup_err: Num,
    #[serde(rename = "expm_norm_B")]
    pub expm_norm_b: Num,
    pub expm_norm_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableJson {
    pub rows: Vec<RowJson>,
}

impl From<&ConvergenceTable> for TableJson {
    fn from(t: &ConvergenceTable) -> Self {
        TableJson {
            rows: t
                .rows
                .iter()
                .map(|r| RowJson {
                    lambda: Num(r.lambda),
                    approx_err: Num(r.approx_err),
                    t: Num(r.t),
                    semigroup_err: Num(r.semigroup_err),
                    expm_norm_b: Num(r.expm_norm_b),
                    expm_norm_exact: r.expm_norm_exact,
                })
                .collect(),
        }
    }
}

/// Row-major matrix.
pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
