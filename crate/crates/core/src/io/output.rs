//! File emission: CSV, JSON with hex-float siblings, legacy VTK.

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

use crate::axisym::{AxisymState, CylinderDomain, MeridianGrid};
use crate::error::{Error, Result};
use crate::spectral::{GridField, GridKind, ModeBasis};

/// C99 `%a` rendering of a double.
pub fn hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let digits = format!("{mant:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

/// Parse the output of [`hex_float`].
pub fn parse_hex_float(s: &str) -> Option<f64> {
    match s {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, rest) = s.strip_prefix('-').map_or((false, s), |r| (true, r));
    let rest = rest.strip_prefix("0x")?;
    let (mant, exp) = rest.split_once('p')?;
    let exp: i32 = exp.parse().ok()?;
    let (lead, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let mut bits: u64 = lead.parse().ok()?;
    if frac.len() > 13 {
        return None;
    }
    let frac_bits = if frac.is_empty() {
        0
    } else {
        u64::from_str_radix(frac, 16).ok()? << (4 * (13 - frac.len()))
    };
    bits = (bits << 52) | frac_bits;
    let v = bits as f64 * 2f64.powi(-52) * 2f64.powi(exp);
    Some(if neg { -v } else { v })
}

fn hex_value(v: &Value) -> Option<Value> {
    match v {
        Value::Number(n) if n.is_f64() => Some(Value::String(hex_float(n.as_f64().unwrap_or(f64::NAN)))),
        Value::Array(items) => {
            let mapped: Vec<Option<Value>> = items.iter().map(hex_value).collect();
            mapped
                .iter()
                .any(Option::is_some)
                .then(|| Value::Array(mapped.into_iter().map(|m| m.unwrap_or(Value::Null)).collect()))
        }
        _ => None,
    }
}

/// Add a `<key>_hex` sibling to every floating-point field and float array.
pub fn with_hex(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, val) in map {
                let val = with_hex(val);
                let hex = hex_value(&val);
                out.insert(k.clone(), val);
                if let Some(h) = hex {
                    out.insert(format!("{k}_hex"), h);
                }
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(with_hex).collect()),
        other => other,
    }
}

pub fn to_json_with_hex<T: Serialize>(value: &T) -> Result<String> {
    let v = with_hex(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `index,k1,k2,k3,kind,polarization,eigenvalue` for the div-free modes.
pub fn spectrum_csv(basis: &ModeBasis) -> String {
    let mut s = String::from("index,k1,k2,k3,kind,polarization,eigenvalue\n");
    for (i, m) in basis.divfree.iter().enumerate() {
        let k = m.index.k;
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{}",
            k[0],
            k[1],
            k[2],
            m.index.kind.as_str(),
            m.index.polarization,
            m.eigenvalue
        );
    }
    s
}

/// `r,z,alpha` over all meridian nodes.
pub fn profile_csv(state: &AxisymState, domain: &CylinderDomain, grid: &MeridianGrid) -> String {
    let mut s = String::from("r,z,alpha\n");
    for [r, z, a] in state.profile_rows(domain, grid) {
        let _ = writeln!(s, "{r},{z},{a}");
    }
    s
}

/// Legacy VTK structured points with vector `E`, optional `curlE`, and an
/// `inside` scalar for masked fields.
pub fn vtk_structured_points(field: &GridField, curl: Option<&[[f64; 3]]>, title: &str) -> Result<String> {
    if field.grid.kind != GridKind::Uniform {
        return Err(Error::Incompatible("structured points need a uniform grid".into()));
    }
    let [nx, ny, nz] = field.grid.shape();
    let h = field.grid.spacing();
    let origin = [0, 1, 2].map(|a| field.grid.axes[a].nodes[0]);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(s, "ORIGIN {} {} {}", origin[0], origin[1], origin[2]);
    let _ = writeln!(s, "SPACING {} {} {}", h[0], h[1], h[2]);
    let _ = writeln!(s, "POINT_DATA {}", field.grid.len());
    let _ = writeln!(s, "VECTORS E double");
    for v in &field.values {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    if let Some(c) = curl {
        if c.len() != field.values.len() {
            return Err(Error::Incompatible("curl samples do not match the field".into()));
        }
        let _ = writeln!(s, "VECTORS curlE double");
        for v in c {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
    }
    if let Some(mask) = &field.mask {
        let _ = writeln!(s, "SCALARS inside int 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for &m in mask {
            let _ = writeln!(s, "{}", u8::from(m));
        }
    }
    Ok(s)
}
