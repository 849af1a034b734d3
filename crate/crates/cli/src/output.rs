//! Output encoders. Every document starts with a provenance header.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
}

impl Provenance {
    fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("{} {} {}", self.tool, self.version, self.command),
            format!("config: {}", self.config),
            match self.seed {
                Some(s) => format!("seed: {s}"),
                None => "seed: none".to_string(),
            },
        ]
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json<T: Serialize>(prov: &Provenance, result: &T) -> Result<Vec<u8>, String> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        provenance: &'a Provenance,
        result: &'a T,
    }
    let mut out = serde_json::to_vec_pretty(&Doc {
        provenance: prov,
        result,
    })
    .map_err(|e| e.to_string())?;
    out.push(b'\n');
    Ok(out)
}

/// CSV with `#` provenance lines, a header row and the given records.
pub fn csv(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for line in prov.comment_lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

/// Binary PGM (P5, maxval 255) with provenance comments. `values` is row-major
/// from the top row; pixels scale linearly from 0 to the largest value.
pub fn pgm(prov: &Provenance, width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), width * height);
    let mut out = b"P5\n".to_vec();
    for line in prov.comment_lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    out.extend_from_slice(format!("{width} {height}\n255\n").as_bytes());
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    out.extend(values.iter().map(|&v| {
        if max > 0.0 && v.is_finite() {
            (255.0 * v / max).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}
