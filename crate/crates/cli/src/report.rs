//! Canonical JSON and CSV output.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so that equal
//! inputs give byte-identical files; non-finite values become strings.

use std::fmt::Write as _;

use jetcurv::{CMat, C64};

pub const SCHEMA: &str = "jetcurv-report/1";

/// Minimal ordered JSON tree with a fixed float format.
#[derive(Clone, Debug, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "\"nan\"".into()
    } else if x > 0.0 {
        "\"inf\"".into()
    } else {
        "\"-inf\"".into()
    }
}

impl Json {
    pub fn obj<const N: usize>(fields: [(&str, Json); N]) -> Json {
        Json::Obj(
            fields
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        )
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn complex(z: C64) -> Json {
        Json::Arr(vec![Json::Num(z.re), Json::Num(z.im)])
    }

    /// Row-major `[re, im]` pairs.
    pub fn matrix(m: &CMat) -> Json {
        Json::Arr(
            (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| Json::complex(m[(i, j)]))
                .collect(),
        )
    }

    pub fn to_pretty(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s.push('\n');
        s
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => write!(out, "{i}").expect("write to string"),
            Json::Num(x) => out.push_str(&num(*x)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
            Json::Arr(items) => {
                // short arrays of scalars stay on one line
                if items
                    .iter()
                    .all(|i| !matches!(i, Json::Arr(_) | Json::Obj(_)))
                {
                    out.push('[');
                    for (n, i) in items.iter().enumerate() {
                        if n > 0 {
                            out.push_str(", ");
                        }
                        i.write(out, indent);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (n, i) in items.iter().enumerate() {
                    pad(out, indent + 2);
                    i.write(out, indent + 2);
                    if n + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (n, (k, v)) in fields.iter().enumerate() {
                    pad(out, indent + 2);
                    out.push_str(&serde_json::to_string(k).expect("key serializes"));
                    out.push_str(": ");
                    v.write(out, indent + 2);
                    if n + 1 < fields.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

/// Columns `re_z, im_z`, then `re_tij, im_tij` for the entries of `theta` in row-major order.
pub fn curvature_csv(rows: &[(C64, CMat)]) -> String {
    let dim = rows.first().map_or(0, |(_, t)| t.nrows());
    let mut s = String::from("re_z,im_z");
    for i in 0..dim {
        for j in 0..dim {
            write!(s, ",re_t{i}_{j},im_t{i}_{j}").expect("write to string");
        }
    }
    s.push('\n');
    for (z, t) in rows {
        write!(s, "{:.16e},{:.16e}", z.re, z.im).expect("write to string");
        for i in 0..dim {
            for j in 0..dim {
                write!(s, ",{:.16e},{:.16e}", t[(i, j)].re, t[(i, j)].im).expect("write to string");
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_numbers() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-2.5e-9), "-2.5000000000000001e-9");
        assert_eq!(num(f64::INFINITY), "\"inf\"");
        assert_eq!(num(f64::NAN), "\"nan\"");
    }

    #[test]
    fn pretty_json_parses_back() {
        let j = Json::obj([
            ("schema", Json::str(SCHEMA)),
            ("x", Json::Num(0.1)),
            ("n", Json::Int(3)),
            ("z", Json::complex(C64::new(1.0, -1.0))),
            (
                "list",
                Json::Arr(vec![Json::obj([("a", Json::Null)]), Json::Bool(true)]),
            ),
            ("empty", Json::Obj(vec![])),
            ("quote", Json::str("a\"b")),
        ]);
        let text = j.to_pretty();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["x"].as_f64().unwrap(), 0.1);
        assert_eq!(v["quote"], "a\"b");
        assert_eq!(text, j.to_pretty());
    }

    #[test]
    fn csv_layout() {
        let t = CMat::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64));
        let s = curvature_csv(&[(C64::new(0.5, 0.0), t)]);
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "re_z,im_z,re_t0_0,im_t0_0,re_t0_1,im_t0_1,re_t1_0,im_t1_0,re_t1_1,im_t1_1"
        );
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.5, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    }
}
