use super::params::{DetectorConfig, DetectorParams, PARAM_NAMES};
use crate::io::{Container, Entry, FormatError};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PRM1";
const CONFIG_ENTRY: &str = "config";

/// Serializes every tensor under its canonical name, preceded by a `config`
/// entry `[patch, dim, memory_capacity, ffn_hidden, scorer_hidden, residual_gain]`.
pub fn write_checkpoint(params: &DetectorParams) -> Result<Vec<u8>, FormatError> {
    let c = params.config;
    let mut container = Container::new(CHECKPOINT_MAGIC);
    let config = [c.patch, c.dim, c.memory_capacity, c.ffn_hidden, c.scorer_hidden].map(|v| v as f32);
    let mut config = config.to_vec();
    config.push(c.residual_gain as f32);
    container.push(Entry::new(CONFIG_ENTRY, vec![config.len()], config));
    for (name, t) in params.tensors() {
        let dims = vec![t.nrows(), t.ncols()];
        container.push(Entry::new(name, dims, t.iter().map(|v| *v as f32).collect()));
    }
    container.encode()
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<DetectorParams, FormatError> {
    let container = Container::decode(bytes, CHECKPOINT_MAGIC)?;
    let cfg = container.require(CONFIG_ENTRY)?;
    if cfg.dims != [6] {
        return Err(FormatError::DimMismatch { entry: CONFIG_ENTRY.into(), expected: "[6]".into(), found: cfg.dims.clone() });
    }
    let size = |i: usize| -> Result<usize, FormatError> {
        let v = cfg.data[i];
        if v.is_finite() && v >= 1.0 && v.fract() == 0.0 && v <= 1e6 {
            Ok(v as usize)
        } else {
            Err(FormatError::InvalidPayload { entry: CONFIG_ENTRY.into(), reason: format!("field {i} = {v}") })
        }
    };
    let config = DetectorConfig {
        patch: size(0)?,
        dim: size(1)?,
        memory_capacity: size(2)?,
        ffn_hidden: size(3)?,
        scorer_hidden: size(4)?,
        residual_gain: cfg.data[5] as f64,
    };
    let mut params = DetectorParams::zeros(config);
    for (name, t) in params.tensors_mut() {
        let entry = container.require(name)?;
        let expected = vec![t.nrows(), t.ncols()];
        if entry.dims != expected {
            return Err(FormatError::DimMismatch {
                entry: name.into(),
                expected: format!("{expected:?}"),
                found: entry.dims.clone(),
            });
        }
        if let Some(i) = entry.data.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::InvalidPayload { entry: name.into(), reason: format!("non-finite value at index {i}") });
        }
        t.iter_mut().zip(&entry.data).for_each(|(d, s)| *d = *s as f64);
    }
    debug_assert_eq!(PARAM_NAMES.len(), params.tensors().len());
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_f32_params_is_exact() {
        let p = DetectorParams::init(DetectorConfig::default(), 5).rounded_to_f32();
        let bytes = write_checkpoint(&p).unwrap();
        assert_eq!(&bytes[..4], b"PRM1");
        assert_eq!(read_checkpoint(&bytes).unwrap(), p);
    }

    #[test]
    fn rejects_pointmap_magic() {
        let p = DetectorParams::zeros(DetectorConfig::default());
        let mut bytes = write_checkpoint(&p).unwrap();
        bytes[..4].copy_from_slice(b"PMAP");
        assert!(matches!(read_checkpoint(&bytes), Err(FormatError::BadMagic { .. })));
    }
}
