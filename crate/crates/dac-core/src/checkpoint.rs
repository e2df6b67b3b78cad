//! Binary field checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `DACF` |
//! | 4 | format version (u32) |
//! | 12 | proposal, density, color resolutions (u32 each) |
//! | 48 | bounding box min and max (f64 × 6) |
//! | 8 | `n_coarse`, `n_fine` (u32 each) |
//! | 48 | near, far, background rgb, uniform mix (f64 × 6) |
//! | rest | proposal, density, color raw parameters as f32, x fastest |
//!
//! Parameters are stored in single precision, so a decoded field equals the
//! trained one only up to f32 rounding. Decoding then encoding again is
//! exact.

use alloc::format;
use alloc::vec::Vec;

use crate::field::{ColorGrid, DensityGrid, FieldModel, SamplingConfig};
use crate::vec3::{Aabb, Vec3};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DACF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 12 + 48 + 8 + 48;

pub fn encode(field: &FieldModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * field.parameter_count());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for r in [field.proposal.res(), field.density.res(), field.color.res()] {
        out.extend_from_slice(&(r as u32).to_le_bytes());
    }
    let b = field.bounds();
    for x in [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let s = &field.sampling;
    out.extend_from_slice(&(s.n_coarse as u32).to_le_bytes());
    out.extend_from_slice(&(s.n_fine as u32).to_le_bytes());
    for x in [
        s.near,
        s.far,
        s.background[0],
        s.background[1],
        s.background[2],
        s.uniform_mix,
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for params in [field.proposal.params(), field.density.params(), field.color.params()] {
        for &p in params {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn params(&mut self, n: usize) -> Result<Vec<f64>> {
        let end = self.pos + 4 * n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "parameter block needs {} bytes, {} remain",
                4 * n,
                self.bytes.len() - self.pos
            )));
        }
        let out = self.bytes[self.pos..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        self.pos = end;
        Ok(out)
    }
}

fn resolution(r: u32) -> Result<usize> {
    if !(2..=1024).contains(&r) {
        return Err(Error::Checkpoint(format!("resolution {r} outside [2, 1024]")));
    }
    Ok(r as usize)
}

pub fn decode(bytes: &[u8]) -> Result<FieldModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take::<4>()? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let rp = resolution(r.u32()?)?;
    let rd = resolution(r.u32()?)?;
    let rc = resolution(r.u32()?)?;
    let mut b = [0.0; 6];
    for x in &mut b {
        *x = r.f64()?;
    }
    let bounds = Aabb {
        min: Vec3::new(b[0], b[1], b[2]),
        max: Vec3::new(b[3], b[4], b[5]),
    };
    let n_coarse = r.u32()? as usize;
    let n_fine = r.u32()? as usize;
    let mut s = [0.0; 6];
    for x in &mut s {
        *x = r.f64()?;
    }
    let sampling = SamplingConfig {
        n_coarse,
        n_fine,
        near: s[0],
        far: s[1],
        background: [s[2], s[3], s[4]],
        uniform_mix: s[5],
    };
    let proposal = DensityGrid::from_params(rp, bounds, r.params(rp * rp * rp)?)?;
    let density = DensityGrid::from_params(rd, bounds, r.params(rd * rd * rd)?)?;
    let color = ColorGrid::from_params(rc, bounds, r.params(3 * rc * rc * rc)?)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    FieldModel::from_grids(proposal, density, color, sampling)
}

/// Rounds every parameter to f32, giving exactly the field a checkpoint
/// round trip produces.
pub fn quantize(field: &mut FieldModel) {
    for p in field
        .proposal
        .params_mut()
        .iter_mut()
        .chain(field.density.params_mut())
        .chain(field.color.params_mut())
    {
        *p = *p as f32 as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Resolutions;
    use rand::Rng;

    fn field() -> FieldModel {
        let mut f = FieldModel::new(
            Resolutions {
                proposal: 3,
                density: 5,
                color: 4,
            },
            Aabb::cube(1.5),
            SamplingConfig::for_rig(3.2, 1.5, [1.0, 0.9, 0.8]),
        )
        .unwrap();
        let mut rng = crate::rng::seeded(4, 0);
        for p in f.density.params_mut().iter_mut().chain(f.color.params_mut()) {
            *p = rng.gen_range(-3.0..3.0);
        }
        f
    }

    #[test]
    fn round_trip() {
        let f = field();
        let bytes = encode(&f);
        assert_eq!(bytes.len(), HEADER_LEN + 4 * f.parameter_count());
        let back = decode(&bytes).unwrap();
        let mut q = f.clone();
        quantize(&mut q);
        assert_eq!(back, q);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&field());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Checkpoint(_))));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(Error::Checkpoint(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(Error::Checkpoint(_))));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode(&v2), Err(Error::Checkpoint(_))));
        let mut nan = bytes;
        let at = nan.len() - 4;
        nan[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode(&nan).is_err());
    }
}
