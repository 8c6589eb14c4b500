//! Plain-text instance files.
//!
//! ```text
//! # comment
//! [shape]
//! lift = 1d          # or 2d
//! n = 48             # 1d: signal length; 2d: big_n and p instead
//! s = 2
//! k = 2
//! n1 = 25            # optional pencil (1d: n1; 2d: n1 and p1)
//! r = 2              # optional model order, used for MUSIC
//! delta = 0          # optional measurement-ball radius
//! [y]
//! 1.5e0+2.5e-1j      # n lines, one complex number each
//! [B_1]
//! 1e0+0e0j -1e0+0e0j # n rows of s entries
//! ...
//! [X_1]              # optional ground truth: s rows of n entries
//! ```
//!
//! Complex numbers are written `re+imj` / `re-imj` with `{:e}` formatting,
//! which round-trips `f64` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mvhl_core::{Complex64, LiftShape, LiftShape2D, Matrix, Subspace, Vector};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftSpec {
    OneD(LiftShape),
    TwoD(LiftShape2D),
}

impl LiftSpec {
    pub fn n(&self) -> usize {
        match self {
            LiftSpec::OneD(s) => s.n(),
            LiftSpec::TwoD(s) => s.big_n() * s.p(),
        }
    }

    pub fn s(&self) -> usize {
        match self {
            LiftSpec::OneD(s) => s.s(),
            LiftSpec::TwoD(s) => s.s(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub lift: LiftSpec,
    /// Model order for MUSIC, if known.
    pub r: Option<usize>,
    pub delta: f64,
    pub y: Vector,
    pub subspaces: Vec<Subspace<f64>>,
    pub truth: Option<Vec<Matrix>>,
}

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:e}{}{:e}j", z.re, sign, z.im.abs())
}

pub fn parse_complex(text: &str) -> std::result::Result<Complex64, String> {
    let t = text.trim();
    let bad = || format!("`{t}` is not a complex number (expected re+imj)");
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_text = &body[split..];
    let im: f64 = match im_text {
        "+" => 1.0,
        "-" => -1.0,
        _ => im_text.trim_start_matches('+').parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

impl Instance {
    pub fn k(&self) -> usize {
        self.subspaces.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# mvhl instance v1\n[shape]\n");
        match &self.lift {
            LiftSpec::OneD(s) => {
                let _ = writeln!(out, "lift = 1d\nn = {}\ns = {}\nn1 = {}", s.n(), s.s(), s.n1());
            }
            LiftSpec::TwoD(s) => {
                let _ = writeln!(
                    out,
                    "lift = 2d\nbig_n = {}\np = {}\ns = {}\nn1 = {}\np1 = {}",
                    s.big_n(),
                    s.p(),
                    s.s(),
                    s.n1(),
                    s.p1()
                );
            }
        }
        let _ = writeln!(out, "k = {}", self.k());
        if let Some(r) = self.r {
            let _ = writeln!(out, "r = {r}");
        }
        let _ = writeln!(out, "delta = {:e}", self.delta);
        out.push_str("[y]\n");
        for z in self.y.iter() {
            out.push_str(&format_complex(*z));
            out.push('\n');
        }
        for (i, b) in self.subspaces.iter().enumerate() {
            let _ = writeln!(out, "[B_{}]", i + 1);
            write_rows(&mut out, b.matrix());
        }
        if let Some(truth) = &self.truth {
            for (i, x) in truth.iter().enumerate() {
                let _ = writeln!(out, "[X_{}]", i + 1);
                write_rows(&mut out, x);
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses instance text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let perr = |line: usize, field: &str, message: String| HarnessError::Parse {
            path: origin.to_string(),
            line,
            field: field.to_string(),
            message,
        };
        // Collect sections: name -> (header line, [(line number, content)]).
        let mut sections: BTreeMap<String, (usize, Vec<(usize, String)>)> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if sections.contains_key(&name) {
                    return Err(perr(lineno, &name, "duplicate section".into()));
                }
                sections.insert(name.clone(), (lineno, Vec::new()));
                current = Some(name);
                continue;
            }
            let Some(name) = &current else {
                return Err(perr(lineno, "header", "content before the first section".into()));
            };
            sections.get_mut(name).expect("section exists").1.push((lineno, line.to_string()));
        }

        let (shape_line, shape_lines) = sections
            .remove("shape")
            .ok_or_else(|| perr(0, "shape", "missing [shape] section".into()))?;
        let mut keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, line) in &shape_lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(*lineno, "shape", format!("expected `key = value`, got `{line}`")))?;
            keys.insert(key.trim().to_string(), (*lineno, value.trim().to_string()));
        }
        let get_usize = |key: &str| -> Result<Option<usize>> {
            keys.get(key)
                .map(|(l, v)| v.parse::<usize>().map_err(|_| perr(*l, key, format!("`{v}` is not a nonnegative integer"))))
                .transpose()
        };
        let require = |key: &str| -> Result<usize> {
            get_usize(key)?.ok_or_else(|| perr(shape_line, key, "missing required key".into()))
        };
        let lift_kind = keys.get("lift").map(|(_, v)| v.as_str()).unwrap_or("1d");
        let s = require("s")?;
        let k = require("k")?;
        let lift = match lift_kind {
            "1d" => {
                let n = require("n")?;
                let n1 = get_usize("n1")?.unwrap_or_else(|| mvhl_core::lifting::default_pencil(n));
                LiftSpec::OneD(LiftShape::new(s, n, n1).map_err(|e| perr(shape_line, "n1", e.to_string()))?)
            }
            "2d" => {
                let (big_n, p) = (require("big_n")?, require("p")?);
                let n1 = get_usize("n1")?.unwrap_or_else(|| mvhl_core::lifting::default_pencil(big_n));
                let p1 = get_usize("p1")?.unwrap_or_else(|| mvhl_core::lifting::default_pencil(p));
                LiftSpec::TwoD(
                    LiftShape2D::new(s, big_n, p, n1, p1).map_err(|e| perr(shape_line, "p1", e.to_string()))?,
                )
            }
            other => return Err(perr(keys["lift"].0, "lift", format!("unknown lift `{other}` (expected 1d or 2d)"))),
        };
        let r = get_usize("r")?;
        let delta = match keys.get("delta") {
            Some((l, v)) => {
                let d: f64 = v.parse().map_err(|_| perr(*l, "delta", format!("`{v}` is not a number")))?;
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(perr(*l, "delta", "must be finite and nonnegative".into()));
                }
                d
            }
            None => 0.0,
        };
        if k == 0 {
            return Err(perr(keys["k"].0, "k", "at least one channel is required".into()));
        }
        let n = lift.n();

        let parse_rows = |name: &str, rows: usize, cols: usize, required: bool| -> Result<Option<Matrix>> {
            let Some((header, lines)) = sections.get(name) else {
                return if required {
                    Err(perr(0, name, "missing section".into()))
                } else {
                    Ok(None)
                };
            };
            if lines.len() != rows {
                return Err(perr(*header, name, format!("expected {rows} rows, found {}", lines.len())));
            }
            let mut m = Matrix::zeros(rows, cols);
            for (i, (lineno, line)) in lines.iter().enumerate() {
                let entries: Vec<&str> = line.split_whitespace().collect();
                if entries.len() != cols {
                    return Err(perr(*lineno, name, format!("expected {cols} entries, found {}", entries.len())));
                }
                for (j, e) in entries.iter().enumerate() {
                    m[(i, j)] = parse_complex(e).map_err(|msg| perr(*lineno, name, msg))?;
                }
            }
            Ok(Some(m))
        };

        let y = parse_rows("y", n, 1, true)?.expect("required");
        let y = Vector::from_iterator(n, y.iter().copied());
        let mut subspaces = Vec::with_capacity(k);
        for i in 1..=k {
            let b = parse_rows(&format!("B_{i}"), n, s, true)?.expect("required");
            subspaces.push(Subspace::new(b));
        }
        let mut truth = Vec::new();
        for i in 1..=k {
            if let Some(x) = parse_rows(&format!("X_{i}"), s, n, false)? {
                truth.push(x);
            }
        }
        let truth = match truth.len() {
            0 => None,
            t if t == k => Some(truth),
            t => return Err(perr(0, "X", format!("ground truth given for {t} of {k} channels"))),
        };
        let known = |name: &str| {
            name == "y"
                || ["B_", "X_"].iter().any(|p| {
                    name.strip_prefix(p)
                        .and_then(|i| i.parse::<usize>().ok())
                        .is_some_and(|i| (1..=k).contains(&i))
                })
        };
        if let Some((name, (line, _))) = sections.iter().find(|(name, _)| !known(name)) {
            return Err(perr(*line, name, "unexpected section".into()));
        }
        Ok(Self { lift, r, delta, y, subspaces, truth })
    }
}

fn write_rows(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}
