//! Binary field snapshots.
//!
//! Little-endian layout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `CVSS` |
//! | 4 | format version, u32 |
//! | 4 + 4 | nx, ny, u32 |
//! | 8 + 8 + 8 | lx, ly, t, f64 |
//! | 1 | component count, u8 |
//! | count·nx·ny·16 | interleaved (re, im) f64 per sample, row-major |

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::states::TwoComponentState;

pub const MAGIC: &[u8; 4] = b"CVSS";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub t: f64,
    pub components: Vec<ComplexField>,
}

impl Snapshot {
    pub fn from_state(state: &TwoComponentState) -> Self {
        Self {
            grid: *state.grid(),
            t: state.t,
            components: vec![state.psi1.clone(), state.psi2.clone()],
        }
    }

    pub fn into_state(self) -> Result<TwoComponentState> {
        let n = self.components.len();
        let mut it = self.components.into_iter();
        match (it.next(), it.next(), n) {
            (Some(a), Some(b), 2) => TwoComponentState::new(a, b, self.t),
            _ => Err(Error::Format(format!("expected 2 components, found {n}"))),
        }
    }
}

pub fn encode(snapshot: &Snapshot) -> Result<Vec<u8>> {
    let g = snapshot.grid;
    let count = u8::try_from(snapshot.components.len())
        .ok()
        .filter(|&c| c > 0)
        .ok_or_else(|| Error::Format("component count must be 1..=255".into()))?;
    for c in &snapshot.components {
        if *c.grid() != g {
            return Err(Error::GridMismatch);
        }
    }
    let to_u32 = |n: usize| {
        u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + count as usize * g.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(g.nx())?.to_le_bytes());
    out.extend_from_slice(&to_u32(g.ny())?.to_le_bytes());
    for v in [g.lx(), g.ly(), snapshot.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(count);
    for c in &snapshot.components {
        for z in c.data() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing CVSS magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        if version.swap_bytes() == FORMAT_VERSION {
            return Err(Error::Format(
                "big-endian snapshot; expected little-endian".into(),
            ));
        }
        return Err(Error::Format(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    let (nx, ny) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    let (lx, ly, t) = (f64_at(bytes, 16), f64_at(bytes, 24), f64_at(bytes, 32));
    let count = bytes[40] as usize;
    let grid = GridSpec::new(nx, ny, lx, ly).map_err(|e| Error::Format(e.to_string()))?;
    if count == 0 {
        return Err(Error::Format("component count is zero".into()));
    }
    if !t.is_finite() {
        return Err(Error::Format("non-finite time".into()));
    }
    let expected = grid
        .len()
        .checked_mul(16 * count)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "size mismatch: {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut components = Vec::with_capacity(count);
    for c in 0..count {
        let base = HEADER_LEN + c * grid.len() * 16;
        let data = (0..grid.len())
            .map(|k| {
                let at = base + 16 * k;
                Complex64::new(f64_at(bytes, at), f64_at(bytes, at + 8))
            })
            .collect();
        components.push(ComplexField::new(grid, data).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(Snapshot {
        grid,
        t,
        components,
    })
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    let bytes = encode(snapshot)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn write_state(path: &Path, state: &TwoComponentState) -> Result<()> {
    write_snapshot(path, &Snapshot::from_state(state))
}

pub fn write_field(path: &Path, field: &ComplexField, t: f64) -> Result<()> {
    write_snapshot(
        path,
        &Snapshot {
            grid: *field.grid(),
            t,
            components: vec![field.clone()],
        },
    )
}

/// Reads the whole file before decoding, so nothing partial is ever returned.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample() -> Snapshot {
        let g = make_grid(16, 8, 3.0, 2.0).unwrap();
        let a = ComplexField::from_fn(g, |x, y| Complex64::new(x.sin(), y * 1e-300));
        let b = ComplexField::from_fn(g, |x, y| Complex64::new(-0.0, x * y + 0.1));
        Snapshot {
            grid: g,
            t: 0.125,
            components: vec![a, b],
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let s = sample();
        let bytes = encode(&s).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 128 * 16);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        for (x, y) in back.components.iter().zip(&s.components) {
            for (p, q) in x.data().iter().zip(y.data()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample()).unwrap();
        assert_eq!(&bytes[..4], b"CVSS");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[16, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[8, 0, 0, 0]);
        assert_eq!(bytes[40], 2);
    }

    #[test]
    fn corrupted_inputs_rejected() {
        let bytes = encode(&sample()).unwrap();
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode(&bytes[..20]), Err(Error::Format(_))));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(decode(&longer).is_err());

        let mut be = bytes.clone();
        be[4..8].copy_from_slice(&FORMAT_VERSION.to_be_bytes());
        let err = decode(&be).unwrap_err().to_string();
        assert!(err.contains("big-endian"), "{err}");

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());

        let mut dims = bytes.clone();
        dims[8..12].copy_from_slice(&12u32.to_le_bytes());
        assert!(decode(&dims).is_err());

        let mut nan = bytes;
        nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&nan).is_err());
    }

    #[test]
    fn state_conversion() {
        let s = sample();
        let st = s.clone().into_state().unwrap();
        assert_eq!(Snapshot::from_state(&st), s);
        let one = Snapshot {
            components: vec![s.components[0].clone()],
            ..s
        };
        assert!(one.into_state().is_err());
    }
}
