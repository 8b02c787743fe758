//! Binary channel dataset export/import.
//!
//! File layout: 8-byte magic `AIRCH01\0`, then five little-endian u32
//! values (format version, sample count, users, subcarriers, antennas),
//! then `num_samples * K * N_c * N_t` complex entries as interleaved
//! little-endian f64 pairs (re, im) in `[sample][k][n][t]` index order.
//! The format is deliberately trivial to parse from any language.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::{generate_channel_tensor, ChannelTensor};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, RandomSource};

pub const CHANNEL_MAGIC: [u8; 8] = *b"AIRCH01\0";
pub const CHANNEL_FORMAT_VERSION: u32 = 1;
/// Magic plus five u32 fields.
pub const HEADER_BYTES: usize = 8 + 5 * 4;

/// Parsed dataset header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u32,
    pub num_samples: u32,
    pub users: u32,
    pub subcarriers: u32,
    pub antennas: u32,
}

impl DatasetHeader {
    /// Payload size in bytes implied by the dimensions.
    pub fn payload_bytes(&self) -> u64 {
        self.num_samples as u64
            * self.users as u64
            * self.subcarriers as u64
            * self.antennas as u64
            * 16
    }
}

/// Draws `count` independent channel tensors from the scenario's geometry
/// and multipath statistics and writes them to `path`. Sample s draws from
/// substream 0 of stream s, the same stream a trial's channel draw would
/// use, so exported sample s equals trial s's channel.
pub fn export_channels(cfg: &ScenarioConfig, count: u32, path: &Path) -> Result<()> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::Config("count: must be at least 1, got 0".into()));
    }
    let geom = cfg.geometry()?;
    let spec = cfg.multipath_spec()?;
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&CHANNEL_MAGIC)?;
    for v in [
        CHANNEL_FORMAT_VERSION,
        count,
        cfg.users as u32,
        cfg.subcarriers as u32,
        cfg.antennas() as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for s in 0..count {
        let mut rng = RandomSource::new(cfg.seed, s as u64).substream(0).rng();
        let h = generate_channel_tensor(&mut rng, cfg.users, &spec, &geom)?;
        for v in h.values().data() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32_le(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Reads a channel dataset back into tensors, bit-exactly. Rejects files
/// whose magic, version, or payload size do not match the header.
pub fn import_channels(path: &Path) -> Result<(DatasetHeader, Vec<ChannelTensor>)> {
    let file = std::fs::File::open(path)?;
    let total_len = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != CHANNEL_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?} (\"AIRCH01\\0\")",
            magic, CHANNEL_MAGIC
        )));
    }
    let header = DatasetHeader {
        version: read_u32_le(&mut r)?,
        num_samples: read_u32_le(&mut r)?,
        users: read_u32_le(&mut r)?,
        subcarriers: read_u32_le(&mut r)?,
        antennas: read_u32_le(&mut r)?,
    };
    if header.version != CHANNEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {}, expected {}",
            header.version, CHANNEL_FORMAT_VERSION
        )));
    }
    if header.num_samples == 0
        || header.users == 0
        || header.subcarriers == 0
        || header.antennas == 0
    {
        return Err(Error::Format(format!(
            "degenerate dimensions in header: {header:?}"
        )));
    }
    let expected = HEADER_BYTES as u64 + header.payload_bytes();
    if total_len != expected {
        return Err(Error::Format(format!(
            "file is {total_len} bytes but the header implies {expected}"
        )));
    }

    let per_sample =
        header.users as usize * header.subcarriers as usize * header.antennas as usize;
    let mut samples = Vec::with_capacity(header.num_samples as usize);
    let mut buf = [0u8; 16];
    for _ in 0..header.num_samples {
        let mut data = Vec::with_capacity(per_sample);
        for _ in 0..per_sample {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        let tensor = ComplexTensor::from_parts(
            vec![
                header.users as usize,
                header.subcarriers as usize,
                header.antennas as usize,
            ],
            data,
        )?;
        samples.push(ChannelTensor::from_tensor(tensor)?);
    }
    Ok((header, samples))
}
