//! `BMHD1` trajectory files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "BMHD1" | version u32 | dim u32 | N u32 | rule u32 | box f64
//! | kappa0 kappa1 mu S epsilon p (f64) | frames u64 | record_dt f64
//! | frames x { t f64, u modes, b modes }   each mode = c1.re c1.im c2.re c2.im
//! | crc32 u32 over every preceding byte
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::{DealiasRule, SpectralGrid};
use crate::params::PhysicalParams;
use crate::state::{Mode, ModeField, SpectralState, STATE_TOL};
use crate::trajectory::Trajectory;

pub const MAGIC: &[u8; 5] = b"BMHD1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 5 + 4 * 4 + 8 + 6 * 8 + 8 + 8;

pub fn encode_trajectory(traj: &Trajectory) -> Vec<u8> {
    let g = traj.grid();
    let p = traj.params();
    let frame_len = 8 + 2 * g.len() * 32;
    let mut out = Vec::with_capacity(HEADER_LEN + traj.len() * frame_len + 4);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, g.dim() as u32, g.n() as u32, g.rule().id()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [g.box_size(), p.kappa0, p.kappa1, p.mu, p.s, p.epsilon, p.p] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&traj.record_dt().to_le_bytes());
    for (t, s) in traj.times().iter().zip(traj.states()) {
        out.extend_from_slice(&t.to_le_bytes());
        for field in [s.u(), s.b()] {
            for m in field.data() {
                for c in m {
                    out.extend_from_slice(&c.re.to_le_bytes());
                    out.extend_from_slice(&c.im.to_le_bytes());
                }
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Parses a `BMHD1` image. The forcing is not stored; the result carries a
/// zero forcing.
pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..5] != MAGIC {
        return Err(Error::Format("missing BMHD1 magic".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Crc { stored, computed });
    }
    let mut r = Reader { buf: payload, pos: 5 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let dim = r.u32()? as usize;
    let n = r.u32()? as usize;
    let rule = DealiasRule::from_id(r.u32()?)?;
    let box_size = r.f64()?;
    let grid = SpectralGrid::with_box(dim, n, rule, box_size)?;
    let mut pv = [0.0; 6];
    for v in &mut pv {
        *v = r.f64()?;
    }
    let params = PhysicalParams::new(pv[0], pv[1], pv[2], pv[3], pv[4], pv[5])?;
    let frames = r.u64()? as usize;
    let record_dt = r.f64()?;
    let frame_len = 8 + 2 * grid.len() * 32;
    let expect = frames
        .checked_mul(frame_len)
        .and_then(|x| x.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("frame count overflows".into()))?;
    if payload.len() != expect {
        return Err(Error::Format(format!(
            "header announces {frames} frames ({expect} bytes), payload has {} bytes",
            payload.len()
        )));
    }
    let mut times = Vec::with_capacity(frames);
    let mut states = Vec::with_capacity(frames);
    for _ in 0..frames {
        times.push(r.f64()?);
        let mut fields = Vec::with_capacity(2);
        for _ in 0..2 {
            let mut data: Vec<Mode> = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                let a = Complex64::new(r.f64()?, r.f64()?);
                let b = Complex64::new(r.f64()?, r.f64()?);
                data.push([a, b]);
            }
            fields.push(ModeField::from_data(&grid, data)?);
        }
        let b = fields.pop().unwrap();
        let u = fields.pop().unwrap();
        let s = SpectralState::new(u, b)?;
        s.check_invariants(STATE_TOL)?;
        states.push(s);
    }
    Trajectory::from_frames(grid, params, Forcing::zero(), record_dt, times, states)
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_trajectory(traj))?;
    f.sync_all()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    decode_trajectory(&fs::read(path)?)
}

/// Zero-pads every frame onto a finer grid with the same box.
pub fn embed_trajectory(traj: &Trajectory, target: &SpectralGrid) -> Result<Trajectory> {
    let states = traj
        .states()
        .iter()
        .map(|s| s.embed(target))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_frames(
        *target,
        *traj.params(),
        traj.forcing().clone(),
        traj.record_dt(),
        traj.times().to_vec(),
        states,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_state, RandomSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(n: usize, frames: usize) -> Trajectory {
        let g = SpectralGrid::new(n, DealiasRule::ThreeHalvesPad).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let p = PhysicalParams::default().with_p(1.5);
        let mut t = Trajectory::new(g, p, Forcing::zero(), 0.25);
        for i in 0..frames {
            let s = random_state(&g, &mut rng, &RandomSpec::default());
            t.push(1.0 + 0.25 * i as f64, s).unwrap();
        }
        t
    }

    fn bits(t: &Trajectory) -> Vec<u64> {
        t.states()
            .iter()
            .flat_map(|s| {
                s.u().data()
                    .iter()
                    .chain(s.b().data())
                    .flat_map(|m| m.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample(8, 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bmhd");
        write_trajectory(&t, &path).unwrap();
        let r = read_trajectory(&path).unwrap();
        assert_eq!(bits(&r), bits(&t));
        assert_eq!(r.times(), t.times());
        assert_eq!(r.params(), t.params());
        assert_eq!(r.grid(), t.grid());
        assert_eq!(encode_trajectory(&r), encode_trajectory(&t));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode_trajectory(&sample(8, 3));
        let cut = &bytes[..bytes.len() - 37];
        assert!(matches!(decode_trajectory(cut), Err(Error::Crc { .. })));
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 20] ^= 0x10;
        assert!(matches!(decode_trajectory(&flipped), Err(Error::Crc { .. })));
        assert!(matches!(decode_trajectory(b"nope"), Err(Error::Format(_))));
    }

    fn reseal(mut bytes: Vec<u8>) -> Vec<u8> {
        bytes.truncate(bytes.len() - 4);
        let crc = crc32fast::hash(&bytes);
        bytes.extend_from_slice(&crc.to_le_bytes());
        bytes
    }

    #[test]
    fn wrong_version_and_length_are_refused() {
        let mut bytes = encode_trajectory(&sample(8, 2));
        bytes[5..9].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_trajectory(&reseal(bytes)), Err(Error::Version(2))));
        let mut bytes = encode_trajectory(&sample(8, 2));
        let at = HEADER_LEN - 16;
        bytes[at..at + 8].copy_from_slice(&3u64.to_le_bytes());
        assert!(matches!(decode_trajectory(&reseal(bytes)), Err(Error::Format(_))));
    }

    #[test]
    fn invariant_violation_on_load() {
        let t = sample(8, 1);
        let mut bytes = encode_trajectory(&t);
        // first u coefficient, c1.re: breaks the conjugate symmetry
        let at = HEADER_LEN + 8;
        let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) + 0.5;
        bytes[at..at + 8].copy_from_slice(&v.to_le_bytes());
        assert!(matches!(decode_trajectory(&reseal(bytes)), Err(Error::Invariant(_))));
    }

    #[test]
    fn embedding_into_a_finer_grid_preserves_norms() {
        let t = sample(16, 3);
        let fine = SpectralGrid::new(32, DealiasRule::ThreeHalvesPad).unwrap();
        let r = decode_trajectory(&encode_trajectory(&t)).unwrap();
        let e = embed_trajectory(&r, &fine).unwrap();
        let p = *t.params();
        for (a, b) in t.states().iter().zip(e.states()) {
            assert!((a.h_norm() - b.h_norm()).abs() <= 1e-14 * a.h_norm());
            assert!((a.v_norm_sq(&p) - b.v_norm_sq(&p)).abs() <= 1e-14 * a.v_norm_sq(&p));
        }
    }
}
