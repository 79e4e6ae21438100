//! Field snapshots and solver checkpoints.
//!
//! Two field dump formats, both rows of (alpha, beta, q0, q1, q2, q3):
//!   - CSV: one row per grid point, row-major beta fastest, '%.17e' floats;
//!   - binary: the same rows as little-endian f64, no header.
//! The checkpoint container wraps a field dump with grid metadata, a time
//! stamp and a coefficient table, and is self-describing.

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::quat::Quaternion;
use crate::spectral::QuaternionField;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DWCHKPT1";

fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

// ---------------------------------------------------------------------------
// CSV rows
// ---------------------------------------------------------------------------

pub fn field_to_csv(f: &QuaternionField) -> String {
    let mut out = String::with_capacity(f.data.len() * 64);
    out.push_str("alpha,beta,q0,q1,q2,q3\n");
    let g = &f.grid;
    for ia in 0..g.n_alpha {
        for ib in 0..g.n_beta {
            let q = f.data[g.idx(ia, ib)];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(g.alpha(ia)),
                fmt_f64(g.beta(ib)),
                fmt_f64(q.q0),
                fmt_f64(q.q1),
                fmt_f64(q.q2),
                fmt_f64(q.q3)
            ));
        }
    }
    out
}

/// Parse a CSV field dump against a declared grid.  The grid coordinates in
/// the file are validated against the grid's own.
pub fn field_from_csv(text: &str, grid: Grid2) -> Result<QuaternionField> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "alpha,beta,q0,q1,q2,q3" => {}
        Some((n, h)) => {
            return Err(Error::Parse {
                line: n + 1,
                field: "header".into(),
                message: format!("expected field dump header, got `{h}`"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                field: "header".into(),
                message: "empty input".into(),
            })
        }
    }
    let mut data = Vec::with_capacity(grid.len());
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Parse {
                line: n + 1,
                field: "row".into(),
                message: format!("expected 6 columns, got {}", cols.len()),
            });
        }
        let mut vals = [0.0f64; 6];
        for (i, c) in cols.iter().enumerate() {
            vals[i] = c.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: n + 1,
                field: format!("column {}", i + 1),
                message: e.to_string(),
            })?;
        }
        let idx = data.len();
        if idx >= grid.len() {
            return Err(Error::Parse {
                line: n + 1,
                field: "row".into(),
                message: format!("more rows than grid points ({})", grid.len()),
            });
        }
        let (ia, ib) = (idx / grid.n_beta, idx % grid.n_beta);
        let (ea, eb) = (grid.alpha(ia), grid.beta(ib));
        if (vals[0] - ea).abs() > 1e-9 * (1.0 + ea.abs())
            || (vals[1] - eb).abs() > 1e-9 * (1.0 + eb.abs())
        {
            return Err(Error::Parse {
                line: n + 1,
                field: "coordinates".into(),
                message: format!("expected ({ea}, {eb}), got ({}, {})", vals[0], vals[1]),
            });
        }
        data.push(Quaternion::new(vals[2], vals[3], vals[4], vals[5]));
    }
    if data.len() != grid.len() {
        return Err(Error::Parse {
            line: 0,
            field: "row count".into(),
            message: format!("expected {} rows, got {}", grid.len(), data.len()),
        });
    }
    Ok(QuaternionField { grid, data })
}

// ---------------------------------------------------------------------------
// Flat binary rows
// ---------------------------------------------------------------------------

pub fn field_to_binary(f: &QuaternionField) -> Vec<u8> {
    let g = &f.grid;
    let mut out = Vec::with_capacity(g.len() * 48);
    for ia in 0..g.n_alpha {
        for ib in 0..g.n_beta {
            let q = f.data[g.idx(ia, ib)];
            for x in [g.alpha(ia), g.beta(ib), q.q0, q.q1, q.q2, q.q3] {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

pub fn field_from_binary(bytes: &[u8], grid: Grid2) -> Result<QuaternionField> {
    let expected = grid.len() * 48;
    if bytes.len() != expected {
        return Err(Error::Decode {
            offset: bytes.len().min(expected),
            message: format!("expected {expected} bytes for a {}x{} field, got {}", grid.n_alpha, grid.n_beta, bytes.len()),
        });
    }
    let mut data = Vec::with_capacity(grid.len());
    for (row, chunk) in bytes.chunks_exact(48).enumerate() {
        let mut vals = [0.0f64; 6];
        for (i, v) in vals.iter_mut().enumerate() {
            let mut b = [0u8; 8];
            b.copy_from_slice(&chunk[i * 8..(i + 1) * 8]);
            *v = f64::from_le_bytes(b);
        }
        let (ia, ib) = (row / grid.n_beta, row % grid.n_beta);
        let (ea, eb) = (grid.alpha(ia), grid.beta(ib));
        if !vals.iter().all(|x| x.is_finite()) {
            return Err(Error::Decode {
                offset: row * 48,
                message: "non-finite value in row".into(),
            });
        }
        if (vals[0] - ea).abs() > 1e-9 * (1.0 + ea.abs())
            || (vals[1] - eb).abs() > 1e-9 * (1.0 + eb.abs())
        {
            return Err(Error::Decode {
                offset: row * 48,
                message: format!("row coordinates ({}, {}) do not match grid ({ea}, {eb})", vals[0], vals[1]),
            });
        }
        data.push(Quaternion::new(vals[2], vals[3], vals[4], vals[5]));
    }
    Ok(QuaternionField { grid, data })
}

// ---------------------------------------------------------------------------
// Checkpoint container
// ---------------------------------------------------------------------------

/// Solver checkpoint: time, grid metadata, named coefficient table, field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub field: QuaternionField,
    pub coefficients: Vec<(String, f64)>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let g = &self.field.grid;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(g.n_alpha as u64).to_le_bytes());
        out.extend_from_slice(&(g.n_beta as u64).to_le_bytes());
        out.extend_from_slice(&g.len_alpha.to_le_bytes());
        out.extend_from_slice(&g.len_beta.to_le_bytes());
        out.extend_from_slice(&(self.coefficients.len() as u64).to_le_bytes());
        for (name, value) in &self.coefficients {
            let nb = name.as_bytes();
            out.extend_from_slice(&(nb.len() as u64).to_le_bytes());
            out.extend_from_slice(nb);
            out.extend_from_slice(&value.to_le_bytes());
        }
        out.extend_from_slice(&field_to_binary(&self.field));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
            if *off + n > bytes.len() {
                return Err(Error::Decode {
                    offset: *off,
                    message: format!("truncated: need {n} more bytes"),
                });
            }
            let s = &bytes[*off..*off + n];
            *off += n;
            Ok(s)
        };
        let read_f64 = |off: &mut usize| -> Result<f64> {
            let s = take(off, 8)?;
            let mut b = [0u8; 8];
            b.copy_from_slice(s);
            Ok(f64::from_le_bytes(b))
        };
        let read_u64 = |off: &mut usize| -> Result<u64> {
            let s = take(off, 8)?;
            let mut b = [0u8; 8];
            b.copy_from_slice(s);
            Ok(u64::from_le_bytes(b))
        };

        let magic = take(&mut off, 8)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Decode {
                offset: 0,
                message: "bad magic".into(),
            });
        }
        let time = read_f64(&mut off)?;
        if !time.is_finite() {
            return Err(Error::Decode {
                offset: 8,
                message: "non-finite time".into(),
            });
        }
        let n_alpha = read_u64(&mut off)? as usize;
        let n_beta = read_u64(&mut off)? as usize;
        if n_alpha > 1 << 20 || n_beta > 1 << 20 {
            return Err(Error::Decode {
                offset: off,
                message: "grid size too large".into(),
            });
        }
        let len_alpha = read_f64(&mut off)?;
        let len_beta = read_f64(&mut off)?;
        let grid = Grid2::new(n_alpha, n_beta, len_alpha, len_beta).map_err(|e| Error::Decode {
            offset: off,
            message: e.to_string(),
        })?;
        let n_coeff = read_u64(&mut off)? as usize;
        if n_coeff > 4096 {
            return Err(Error::Decode {
                offset: off,
                message: "coefficient table too large".into(),
            });
        }
        let mut coefficients = Vec::with_capacity(n_coeff);
        for _ in 0..n_coeff {
            let name_len = read_u64(&mut off)? as usize;
            if name_len > 4096 {
                return Err(Error::Decode {
                    offset: off,
                    message: "coefficient name too long".into(),
                });
            }
            let name = std::str::from_utf8(take(&mut off, name_len)?)
                .map_err(|e| Error::Decode {
                    offset: off,
                    message: format!("coefficient name not UTF-8: {e}"),
                })?
                .to_string();
            let value = read_f64(&mut off)?;
            coefficients.push((name, value));
        }
        let field = field_from_binary(&bytes[off..], grid)?;
        Ok(Checkpoint {
            time,
            field,
            coefficients,
        })
    }
}
