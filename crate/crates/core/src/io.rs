//! Field specification files and structured output.

use std::io::Write;
use std::path::Path;

use rug::{Integer, Rational};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::ball::{CBall, Interval};
use crate::classify::{ClassificationRecord, PrivilegedEmbeddings};
use crate::density::{DensityRow, VolumeReport, VOLUME_CONVENTION};
use crate::error::{Error, Result};
use crate::field::{parse_rational, FieldElement, NumberField};
use crate::solver::SolutionRecord;
use crate::trace::{Margin, SolutionTrace, Verdict};
use crate::units::{UnitExponent, UnitGroupBasis};

/// On-disk description of K = Q(α) and a unit basis.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpecFile {
    /// `a_0, …, a_d`, numbers or decimal strings.
    pub poly: Vec<Value>,
    pub units: Vec<Vec<String>>,
    pub torsion_order: u64,
    pub torsion_gen: Vec<String>,
    #[serde(default)]
    pub reference_regulator: Option<String>,
}

impl FieldSpecFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn poly_integers(&self) -> Result<Vec<Integer>> {
        self.poly
            .iter()
            .map(|v| match v {
                Value::Number(n) => n
                    .as_i64()
                    .map(Integer::from)
                    .ok_or_else(|| Error::InvalidInput(format!("coefficient {n} is not an integer"))),
                Value::String(s) => Integer::from_str_radix(s.trim(), 10)
                    .map_err(|_| Error::InvalidInput(format!("coefficient {s:?} is not an integer"))),
                other => Err(Error::InvalidInput(format!("coefficient {other} is not an integer"))),
            })
            .collect()
    }
}

pub fn load_field(spec: &FieldSpecFile, max_prec: u32) -> Result<NumberField> {
    NumberField::with_max_precision(&spec.poly_integers()?, max_prec)
}

pub fn validate_basis(field: &NumberField, spec: &FieldSpecFile) -> Result<UnitGroupBasis> {
    let units = spec
        .units
        .iter()
        .map(|u| field.parse_element(u))
        .collect::<Result<Vec<_>>>()?;
    let gen = field.parse_element(&spec.torsion_gen)?;
    let reg = spec.reference_regulator.as_deref().map(parse_rational).transpose()?;
    UnitGroupBasis::new(field, units, spec.torsion_order, gen, reg)
}

pub fn interval(x: &Interval) -> Value {
    json!({ "mid": x.mid_string(20), "rad": x.rad_string() })
}

pub fn cball(z: &CBall) -> Value {
    json!({ "re": interval(&z.re), "im": interval(&z.im) })
}

pub fn rational(q: &Rational) -> Value {
    Value::String(q.to_string())
}

pub fn integer(n: &Integer) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => Value::String(n.to_string()),
    }
}

pub fn element(g: &FieldElement) -> Value {
    json!(g.to_strings())
}

pub fn exponent(e: &UnitExponent) -> Value {
    json!({ "torsion_power": e.torsion_power, "exponents": e.exponents })
}

pub fn classification(r: &ClassificationRecord) -> Value {
    json!({
        "type": "unit",
        "eps": exponent(&r.eps),
        "in_E": r.in_e,
        "in_E_nu": r.in_e_nu,
        "in_tilde_E_nu": r.in_tilde_e_nu,
        "nu": rational(&r.nu),
        "house_alpha_eps": interval(&r.house_alpha_eps),
        "witnesses": r.witnesses,
        "tilde_witnesses": r.tilde_witnesses,
        "house_at_most_one": r.house_le_one,
        "borderline": r.borderline,
    })
}

pub fn solution(r: &SolutionRecord) -> Value {
    json!({
        "type": "solution",
        "x": r.x,
        "y": r.y,
        "eps": exponent(&r.e),
        "value": integer(&r.value),
        "m": integer(&r.m),
        "swapped": r.swapped,
    })
}

fn margin(m: &Margin) -> Value {
    json!({
        "id": m.id,
        "statement": m.statement,
        "lhs": m.lhs.as_ref().map(interval),
        "rhs": m.rhs.as_ref().map(interval),
        "ratio": m.ratio().as_ref().map(interval),
        "verdict": m.verdict,
        "note": m.note,
    })
}

fn privileged(p: &PrivilegedEmbeddings) -> Value {
    serde_json::to_value(p).expect("plain data")
}

pub fn trace(t: &SolutionTrace) -> Value {
    let regime = if t.small_regime { "small" } else { "large" };
    json!({
        "type": "trace",
        "solution": solution(&t.solution),
        "orientation": if t.reciprocal { "reciprocal" } else { "direct" },
        "x": t.x,
        "y": t.y,
        "eps": exponent(&t.e),
        "alpha_eps": element(&t.alpha_eps),
        "beta": element(&t.beta),
        "rho": t.rho.as_ref().map(element),
        "b": t.b.as_ref().map(exponent),
        "A_tilde": interval(&t.a_tilde),
        "A": t.a,
        "B_tilde": interval(&t.b_tilde),
        "B": t.big_b,
        "rho_height": t.rho_height.as_ref().map(interval),
        "privileged": t.privileged.as_ref().map(privileged),
        "lemma4_c": interval(&t.c),
        "regime": regime,
        "regime_threshold": t.regime_threshold.as_ref().map(interval),
        "regime_reasons": t.regime_reasons,
        "margins": t.margins.iter().map(|m| {
            let mut v = margin(m);
            v["regime"] = json!(regime);
            v
        }).collect::<Vec<_>>(),
        "linear_forms": t.linear_forms.iter().map(|l| json!({
            "id": l.id,
            "indices": l.indices,
            "value": l.value.as_ref().map(interval),
            "witnesses": l.witnesses.iter().map(|(k, v)| json!({"label": k, "value": interval(v)})).collect::<Vec<_>>(),
            "verdict": l.verdict,
            "note": l.note,
        })).collect::<Vec<_>>(),
        "consistency": t.consistency.iter().map(|c| json!({"id": c.id, "ok": c.ok, "note": c.note})).collect::<Vec<_>>(),
        "precision": t.precision,
    })
}

pub fn trace_has_borderline(t: &SolutionTrace) -> bool {
    t.margins.iter().any(|m| m.verdict == Verdict::Borderline)
}

pub fn volume(v: &VolumeReport) -> Value {
    json!({
        "type": "volume",
        "region": v.kind.name(),
        "convention": VOLUME_CONVENTION,
        "exact": v.exact.as_ref().map(rational),
        "inscribed_box": v.inscribed_box,
        "monte_carlo": v.estimate.map(|e| json!({
            "estimate": format!("{e:.6}"),
            "stderr": format!("{:.6}", v.stderr.unwrap_or(0.0)),
            "hits": v.hits,
            "samples": v.samples,
            "seed": v.seed,
        })),
        "reason": v.reason,
    })
}

pub fn density_row(r: &DensityRow) -> Value {
    json!({
        "type": "density",
        "N": r.n.to_string(),
        "log_N": interval(&r.log_n),
        "units": r.units,
        "E": r.e,
        "E_nu": r.e_nu,
        "tilde_E_nu": r.tilde_e_nu,
        "borderline": r.borderline,
        "ratio_units": interval(&r.ratios[0]),
        "ratio_E": interval(&r.ratios[1]),
        "ratio_E_nu": interval(&r.ratios[2]),
        "ratio_tilde_E_nu": interval(&r.ratios[3]),
        "lattice_lower": r.lattice_lower,
        "lattice_upper": r.lattice_upper,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidInput(format!("unknown format {s:?}"))),
        }
    }
}

/// Writes a header followed by rows. CSV output puts the header on a `#`
/// line and flattens nested values to compact JSON.
pub struct Emitter<W: Write> {
    out: W,
    format: Format,
    columns: Option<Vec<String>>,
}

impl<W: Write> Emitter<W> {
    pub fn new(out: W, format: Format, header: &Value) -> Result<Self> {
        let mut e = Emitter {
            out,
            format,
            columns: None,
        };
        match format {
            Format::Jsonl => writeln!(e.out, "{}", serde_json::to_string(header)?)?,
            Format::Csv => writeln!(e.out, "# {}", serde_json::to_string(header)?)?,
        }
        Ok(e)
    }

    pub fn row(&mut self, v: &Value) -> Result<()> {
        match self.format {
            Format::Jsonl => writeln!(self.out, "{}", serde_json::to_string(v)?)?,
            Format::Csv => {
                let obj: Map<String, Value> = match v {
                    Value::Object(m) => m.clone(),
                    other => Map::from_iter([("value".to_string(), other.clone())]),
                };
                let mut w = csv::WriterBuilder::new().from_writer(vec![]);
                if self.columns.is_none() {
                    let cols: Vec<String> = obj.keys().cloned().collect();
                    w.write_record(&cols).map_err(csv_err)?;
                    self.columns = Some(cols);
                }
                let cols = self.columns.as_ref().expect("columns set");
                let rec: Vec<String> = cols
                    .iter()
                    .map(|c| match obj.get(c) {
                        None | Some(Value::Null) => String::new(),
                        Some(Value::String(s)) => s.clone(),
                        Some(other) => other.to_string(),
                    })
                    .collect();
                w.write_record(&rec).map_err(csv_err)?;
                let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
                self.out.write_all(&bytes)?;
            }
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv output: {e}"))
}

/// Exit status for a finished run.
pub fn exit_code(borderline: bool, inconsistent: bool) -> i32 {
    if inconsistent {
        4
    } else if borderline {
        3
    } else {
        0
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Undecided { .. } | Error::DivisionByZeroBall(_) => 3,
        Error::Inconsistency(_) => 4,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_file_roundtrip() {
        let text = r#"{"poly": [1, 0, 0, "-2"], "units": [["-1", "1", "0"]], "torsion_order": 2, "torsion_gen": ["-1", "0", "0"], "reference_regulator": "1.347374"}"#;
        let spec: FieldSpecFile = serde_json::from_str(text).unwrap();
        let k = load_field(&spec, 4096).unwrap();
        let b = validate_basis(&k, &spec).unwrap();
        assert_eq!(b.rank(), 1);
        assert!(b.regulator_index().unwrap().is_some());
    }

    #[test]
    fn bad_specs() {
        let red: FieldSpecFile = serde_json::from_str(r#"{"poly": [1, 0, -1, 0, -2], "units": [], "torsion_order": 2, "torsion_gen": ["-1"]}"#).unwrap();
        assert!(matches!(load_field(&red, 4096), Err(Error::Reducible(_))));
        assert!(serde_json::from_str::<FieldSpecFile>(r#"{"poly": [1], "units": [], "torsion_order": 2, "torsion_gen": [], "extra": 1}"#).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut e = Emitter::new(vec![], Format::Csv, &json!({"type": "header"})).unwrap();
        e.row(&json!({"x": 1, "y": "a,b"})).unwrap();
        e.row(&json!({"x": 2, "y": null})).unwrap();
        let s = String::from_utf8(e.into_inner()).unwrap();
        assert_eq!(s, "# {\"type\":\"header\"}\nx,y\n1,\"a,b\"\n2,\n");
    }
}
