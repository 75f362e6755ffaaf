//! Binary model files: `TFAE` (autoencoder) and `TFGM` (mixture).
//!
//! Both start with 4 magic bytes and a `u32` format version; every integer is
//! a little-endian `u32` and every parameter a little-endian `f64`.
//!
//! ```text
//! TFAE: activation, n_widths, widths[n_widths],
//!       then per layer: weights[out * in] (row-major), biases[out]
//! TFGM: k, dim, covariance_floor (f64),
//!       weights[k], means[k * dim], variances[k * dim]
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::binary::{ByteReader, ByteWriter};
use crate::motion::autoencoder::{Activation, AutoencoderModel, Layer};
use crate::motion::gmm::GmmModel;

pub const AE_MAGIC: &[u8; 4] = b"TFAE";
pub const GMM_MAGIC: &[u8; 4] = b"TFGM";

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} {v} exceeds u32")))
}

impl AutoencoderModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_magic(AE_MAGIC);
        w.u32(self.activation.code());
        let widths = self.widths();
        w.u32(to_u32(widths.len(), "layer count")?);
        for width in widths {
            w.u32(to_u32(width, "layer width")?);
        }
        for layer in &self.layers {
            w.f64s(&layer.weights);
            w.f64s(&layer.biases);
        }
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path);
        r.header(AE_MAGIC)?;
        let code = r.u32("activation")?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| r.error(format!("unknown activation {code}")))?;
        let n = r.u32("layer count")? as usize;
        if n < 2 {
            return Err(r.error(format!("need at least 2 layer widths, found {n}")));
        }
        r.require(n * 4, "layer widths")?;
        let widths = (0..n)
            .map(|_| r.u32("layer width").map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(n - 1);
        for pair in widths.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let weights = r.f64s(inputs * outputs, "layer weights")?;
            let biases = r.f64s(outputs, "layer biases")?;
            layers.push(Layer {
                inputs,
                outputs,
                weights,
                biases,
            });
        }
        let model = AutoencoderModel { layers, activation };
        if model.parameters().iter().any(|p| !p.is_finite()) {
            return Err(r.error("non-finite autoencoder parameter"));
        }
        r.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        AutoencoderModel::from_bytes(&bytes, path)
    }
}

impl GmmModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_magic(GMM_MAGIC);
        w.u32(to_u32(self.k(), "component count")?);
        w.u32(to_u32(self.dim(), "dimension")?);
        w.f64(self.covariance_floor);
        w.f64s(&self.weights);
        self.means.iter().for_each(|m| w.f64s(m));
        self.variances.iter().for_each(|v| w.f64s(v));
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path);
        r.header(GMM_MAGIC)?;
        let k = r.u32("component count")? as usize;
        let dim = r.u32("dimension")? as usize;
        let covariance_floor = r.f64("covariance floor")?;
        r.require((k + 2 * k * dim) * 8, "mixture parameters")?;
        let weights = r.f64s(k, "weights")?;
        let means = (0..k)
            .map(|_| r.f64s(dim, "means"))
            .collect::<Result<Vec<_>>>()?;
        let variances = (0..k)
            .map(|_| r.f64s(dim, "variances"))
            .collect::<Result<Vec<_>>>()?;
        let model = GmmModel {
            weights,
            means,
            variances,
            covariance_floor,
        };
        model.validate().map_err(|e| r.error(e.to_string()))?;
        r.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        GmmModel::from_bytes(&bytes, path)
    }
}
