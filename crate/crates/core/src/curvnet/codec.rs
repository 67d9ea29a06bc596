use alloc::vec::Vec;

use super::{CurvNet, CurvNetError, Loss, NetConfig, Variant};

/// First bytes of every model file.
pub const MODEL_MAGIC: &[u8; 8] = b"CURVNET\x01";

/// Serialize as: magic, config block, parameter count, then every parameter
/// as a little-endian `f32` in layer order.
pub fn encode_model(net: &CurvNet) -> Vec<u8> {
    let cfg = net.config();
    let mut out = Vec::with_capacity(64 + 4 * net.parameter_count());
    out.extend_from_slice(MODEL_MAGIC);
    out.push(match cfg.variant {
        Variant::Small => 0,
        Variant::Large => 1,
    });
    match cfg.loss {
        Loss::Huber { delta } => {
            out.push(0);
            out.extend_from_slice(&delta.to_le_bytes());
        }
        Loss::Mse => {
            out.push(1);
            out.extend_from_slice(&0f64.to_le_bytes());
        }
    }
    out.extend_from_slice(&(cfg.conv_channels.len() as u32).to_le_bytes());
    for (&c, &k) in cfg.conv_channels.iter().zip(&cfg.conv_kernels) {
        out.extend_from_slice(&(c as u32).to_le_bytes());
        out.extend_from_slice(&(k as u32).to_le_bytes());
    }
    out.extend_from_slice(&(cfg.embedding_dim as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.input_size.0 as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.input_size.1 as u32).to_le_bytes());
    out.extend_from_slice(&(net.parameter_count() as u64).to_le_bytes());
    for &p in net.parameters() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CurvNetError> {
        let end =
            self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CurvNetError::Format("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CurvNetError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, CurvNetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64, CurvNetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CurvNetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<CurvNet, CurvNetError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
        return Err(CurvNetError::Format("bad magic"));
    }
    let variant = match r.u8()? {
        0 => Variant::Small,
        1 => Variant::Large,
        _ => return Err(CurvNetError::Format("unknown variant")),
    };
    let loss = match (r.u8()?, r.f64()?) {
        (0, delta) => Loss::Huber { delta },
        (1, _) => Loss::Mse,
        _ => return Err(CurvNetError::Format("unknown loss")),
    };
    let layers = r.u32()?;
    if layers > 64 {
        return Err(CurvNetError::Format("implausible layer count"));
    }
    let mut conv_channels = Vec::with_capacity(layers);
    let mut conv_kernels = Vec::with_capacity(layers);
    for _ in 0..layers {
        conv_channels.push(r.u32()?);
        conv_kernels.push(r.u32()?);
    }
    let embedding_dim = r.u32()?;
    let input_size = (r.u32()?, r.u32()?);
    let config = NetConfig { variant, conv_channels, conv_kernels, embedding_dim, input_size, loss };
    let count = r.u64()? as usize;
    if count.checked_mul(4) != Some(bytes.len() - r.pos) {
        return Err(CurvNetError::Format("parameter block length does not match the count"));
    }
    let params = r.take(4 * count)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    CurvNet::from_parameters(&config, params)
}
