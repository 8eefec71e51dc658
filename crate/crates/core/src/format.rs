//! JSON documents for functions, products, hull certificates and results.
//!
//! Half-integers are strings (`"1/2"`, `"-3/2"`, `"2"`), rationals are
//! `"p/q"` or `"p"`. Every document written here carries `"schema": 1`.

use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expand::FiniteFunction;
use crate::haar::ProductSpec;
use crate::hull::HullMembership;
use crate::scalar::{parse_rational, rational_to_string, GaussRational, HalfInt, Rational};
use crate::wigner::MatrixElementIndex;

pub const SCHEMA_VERSION: u64 = 1;

fn field<'a>(obj: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(format!("{path}.{key}"), "missing"))
}

fn str_field<'a>(obj: &'a Value, path: &str, key: &str) -> Result<&'a str> {
    field(obj, path, key)?
        .as_str()
        .ok_or_else(|| Error::parse(format!("{path}.{key}"), "expected a string"))
}

fn half_int_field(obj: &Value, path: &str, key: &str) -> Result<HalfInt> {
    str_field(obj, path, key)?
        .parse()
        .map_err(|e: Error| Error::parse(format!("{path}.{key}"), e.to_string()))
}

fn rational_field(obj: &Value, path: &str, key: &str) -> Result<Rational> {
    parse_rational(str_field(obj, path, key)?).map_err(|e| Error::parse(format!("{path}.{key}"), e.to_string()))
}

fn check_schema(doc: &Value) -> Result<()> {
    match doc.get("schema") {
        None => Ok(()),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::parse("schema", format!("unsupported version {v}"))),
    }
}

fn array_field<'a>(doc: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    if !doc.is_object() {
        return Err(Error::parse("$", "expected a JSON object"));
    }
    check_schema(doc)?;
    doc.get(key)
        .ok_or_else(|| Error::parse(key, "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse(key, "expected an array"))
}

/// Reads `{"l", "m", "n"}` at `path`.
pub fn index_from_json(obj: &Value, path: &str) -> Result<MatrixElementIndex> {
    let l = half_int_field(obj, path, "l")?;
    let m = half_int_field(obj, path, "m")?;
    let n = half_int_field(obj, path, "n")?;
    MatrixElementIndex::new(l, m, n).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn index_to_json(idx: &MatrixElementIndex) -> Value {
    json!({ "l": idx.l().to_string(), "m": idx.m().to_string(), "n": idx.n().to_string() })
}

/// Parses `"l,m,n"`, e.g. `"1,-1,-1"` or `"1/2,1/2,-1/2"`.
pub fn parse_index_triple(s: &str) -> Result<MatrixElementIndex> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::parse("index", format!("expected l,m,n but got {s:?}")));
    }
    let mut values = Vec::with_capacity(3);
    for (name, part) in ["l", "m", "n"].iter().zip(&parts) {
        values.push(
            part.parse::<HalfInt>()
                .map_err(|e| Error::parse(format!("index.{name}"), e.to_string()))?,
        );
    }
    let n = values.pop().expect("three parts");
    let m = values.pop().expect("three parts");
    let l = values.pop().expect("three parts");
    MatrixElementIndex::new(l, m, n).map_err(|e| Error::parse("index", e.to_string()))
}

pub fn gauss_to_json(z: &GaussRational) -> Value {
    json!({ "re": rational_to_string(&z.re), "im": rational_to_string(&z.im) })
}

pub fn gauss_from_json(obj: &Value, path: &str) -> Result<GaussRational> {
    let re = rational_field(obj, path, "re")?;
    let im = match obj.get("im") {
        None => Rational::from_integer(0.into()),
        Some(_) => rational_field(obj, path, "im")?,
    };
    Ok(GaussRational::new(re, im))
}

/// `{"schema": 1, "terms": [{"l", "m", "n", "coeff": {"re", "im"}}, …]}`.
pub fn function_to_json(f: &FiniteFunction) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .iter()
        .map(|(idx, coeff)| {
            let mut obj = index_to_json(idx);
            obj["coeff"] = gauss_to_json(coeff);
            obj
        })
        .collect();
    json!({ "schema": SCHEMA_VERSION, "terms": terms })
}

pub fn function_from_json(doc: &Value) -> Result<FiniteFunction> {
    let terms = array_field(doc, "terms")?;
    let mut parsed = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        let path = format!("terms[{i}]");
        let idx = index_from_json(term, &path)?;
        let coeff = gauss_from_json(field(term, &path, "coeff")?, &format!("{path}.coeff"))?;
        if coeff.is_zero() {
            return Err(Error::parse(format!("{path}.coeff"), "coefficient must be nonzero"));
        }
        if parsed.iter().any(|(other, _)| other == &idx) {
            return Err(Error::parse(path, format!("index {idx} appears twice")));
        }
        parsed.push((idx, coeff));
    }
    FiniteFunction::new(parsed)
}

/// `{"schema": 1, "factors": [{"l", "m", "n", "power"}, …], "h": {"l", "m", "n"}?}`.
pub fn product_to_json(spec: &ProductSpec, h: Option<&MatrixElementIndex>) -> Value {
    let factors: Vec<Value> = spec
        .factors()
        .iter()
        .map(|(idx, power)| {
            let mut obj = index_to_json(idx);
            obj["power"] = json!(power);
            obj
        })
        .collect();
    let mut doc = json!({ "schema": SCHEMA_VERSION, "factors": factors });
    if let Some(h) = h {
        doc["h"] = index_to_json(h);
    }
    doc
}

pub fn product_from_json(doc: &Value) -> Result<(ProductSpec, Option<MatrixElementIndex>)> {
    let factors = array_field(doc, "factors")?;
    let mut parsed = Vec::with_capacity(factors.len());
    for (i, factor) in factors.iter().enumerate() {
        let path = format!("factors[{i}]");
        let idx = index_from_json(factor, &path)?;
        let power = match factor.get("power") {
            None => 1,
            Some(p) => p
                .as_u64()
                .and_then(|p| u32::try_from(p).ok())
                .ok_or_else(|| Error::parse(format!("{path}.power"), "expected a nonnegative 32-bit integer"))?,
        };
        parsed.push((idx, power));
    }
    let h = match doc.get("h") {
        None | Some(Value::Null) => None,
        Some(h) => Some(index_from_json(h, "h")?),
    };
    Ok((ProductSpec::new(parsed), h))
}

/// Inside: `{"inside": true, "weights": ["1/2", …]}`; outside:
/// `{"inside": false, "separator": {"m": "u", "n": "v", "bound": "1"}}`
/// meaning `u·m + v·n ≥ 1` on every point.
pub fn membership_to_json(points: &[(HalfInt, HalfInt)], membership: &HullMembership) -> Value {
    let pts: Vec<Value> = points
        .iter()
        .map(|(m, n)| json!([m.to_string(), n.to_string()]))
        .collect();
    let mut out = Map::new();
    out.insert("points".into(), Value::Array(pts));
    match membership {
        HullMembership::Inside { weights } => {
            out.insert("inside".into(), json!(true));
            out.insert(
                "weights".into(),
                Value::Array(weights.iter().map(|w| json!(rational_to_string(w))).collect()),
            );
        }
        HullMembership::Outside { normal } => {
            out.insert("inside".into(), json!(false));
            out.insert(
                "separator".into(),
                json!({
                    "m": rational_to_string(&normal.0),
                    "n": rational_to_string(&normal.1),
                    "bound": "1",
                    "text": separator_text(normal),
                }),
            );
        }
    }
    Value::Object(out)
}

fn coeff_text(q: &Rational, var: &str) -> String {
    if q == &Rational::from_integer(1.into()) {
        var.to_string()
    } else if q == &Rational::from_integer((-1).into()) {
        format!("-{var}")
    } else {
        format!("{}{var}", rational_to_string(q))
    }
}

/// `"m + n ≥ 1"`-style rendering of a separator.
pub fn separator_text(normal: &(Rational, Rational)) -> String {
    let zero = Rational::from_integer(0.into());
    let mut parts: Vec<String> = Vec::new();
    if normal.0 != zero {
        parts.push(coeff_text(&normal.0, "m"));
    }
    if normal.1 != zero {
        let t = coeff_text(&normal.1, "n");
        if parts.is_empty() {
            parts.push(t);
        } else if let Some(rest) = t.strip_prefix('-') {
            parts.push(format!("- {rest}"));
        } else {
            parts.push(format!("+ {t}"));
        }
    }
    format!("{} >= 1", parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::{origin_certificate, SupportHull};
    use crate::scalar::rational;

    #[test]
    fn function_round_trip() {
        let text = r#"{"schema":1,"terms":[{"coeff":{"im":"0","re":"1"},"l":"1/2","m":"1/2","n":"-1/2"},{"coeff":{"im":"3","re":"-1/2"},"l":"2","m":"0","n":"1"}]}"#;
        let doc: Value = serde_json::from_str(text).unwrap();
        let f = function_from_json(&doc).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(serde_json::to_string(&function_to_json(&f)).unwrap(), text);
    }

    #[test]
    fn function_parse_errors_name_the_field() {
        let cases = [
            (r#"{"terms":[{"l":"1/2","m":"1","n":"0","coeff":{"re":"1"}}]}"#, "terms[0]"),
            (r#"{"terms":[{"l":"1","m":"0","n":"0","coeff":{"re":"0","im":"0"}}]}"#, "terms[0].coeff"),
            (r#"{"terms":[{"l":"0.5","m":"0","n":"0","coeff":{"re":"1"}}]}"#, "terms[0].l"),
            (r#"{"terms":[{"l":"1","m":"0","n":"0","coeff":{"re":"1/0"}}]}"#, "terms[0].coeff.re"),
            (r#"{"terms":[{"l":"1","m":"0","coeff":{"re":"1"}}]}"#, "terms[0].n"),
            (r#"{"schema":2,"terms":[]}"#, "schema"),
            (r#"{"nope":[]}"#, "terms"),
        ];
        for (text, expected) in cases {
            let doc: Value = serde_json::from_str(text).unwrap();
            match function_from_json(&doc) {
                Err(Error::Parse { field, .. }) => assert_eq!(field, expected, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn product_round_trip() {
        let text = r#"{"factors":[{"l":"1/2","m":"-1/2","n":"-1/2","power":1},{"l":"1/2","m":"1/2","n":"1/2","power":2}],"h":{"l":"1","m":"-1","n":"-1"},"schema":1}"#;
        let doc: Value = serde_json::from_str(text).unwrap();
        let (spec, h) = product_from_json(&doc).unwrap();
        assert_eq!(serde_json::to_string(&product_to_json(&spec, h.as_ref())).unwrap(), text);
    }

    #[test]
    fn index_triples() {
        let idx = parse_index_triple("1,-1,-1").unwrap();
        assert_eq!(idx, MatrixElementIndex::from_twice(2, -2, -2).unwrap());
        assert!(parse_index_triple("1,2,0").is_err());
        assert!(parse_index_triple("1,0").is_err());
    }

    #[test]
    fn separator_rendering() {
        assert_eq!(separator_text(&(rational(1, 1), rational(1, 1))), "m + n >= 1");
        assert_eq!(separator_text(&(rational(0, 1), rational(-2, 3))), "-2/3n >= 1");
        assert_eq!(separator_text(&(rational(2, 1), rational(-1, 1))), "2m - n >= 1");
        let h = SupportHull::new([(HalfInt::half(), HalfInt::half())]).unwrap();
        let doc = membership_to_json(h.points(), &origin_certificate(&h));
        assert_eq!(doc["separator"]["text"], "m + n >= 1");
    }
}
