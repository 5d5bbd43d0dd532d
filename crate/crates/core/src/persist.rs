//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "ECML"  u32 version
//! u8 learner tag (0 rmml, 1 kissme, 2 genuine-baseline)
//! f64 lambda   f64 rho (NaN when absent)   u64 seed   u64 input_dim   u32 L
//! per stage:  u32 N_l  u32 D_g  u32[N_l·D_g] permutation
//!             N_l × (D_g·D_g f64, row-major P)  u32[N_l] clamped counts
//! u64 final dim  f64[dim·dim] final metric (row-major)
//! u8 has_pca; if 1: u64 input dim, u64 k, f64[input dim] mean,
//!                   f64[input dim · k] basis (row-major)
//! ```

use std::path::Path;

use nalgebra::DMatrix;

use crate::cascade::{CascadeModel, Projection, StageModel};
use crate::error::{Error, Result};
use crate::features::PcaModel;
use crate::metrics::{Learner, LearnerTag, MetricModel};

pub const MODEL_MAGIC: &[u8; 4] = b"ECML";
pub const FORMAT_VERSION: u32 = 1;

/// A fitted cascade together with the optional PCA applied before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub pca: Option<PcaModel>,
    pub cascade: CascadeModel,
}

fn tag_byte(tag: LearnerTag) -> u8 {
    match tag {
        LearnerTag::Rmml => 0,
        LearnerTag::Kissme => 1,
        LearnerTag::GenuineBaseline => 2,
    }
}

fn tag_from_byte(b: u8) -> Result<LearnerTag> {
    match b {
        0 => Ok(LearnerTag::Rmml),
        1 => Ok(LearnerTag::Kissme),
        2 => Ok(LearnerTag::GenuineBaseline),
        other => Err(Error::CorruptModel(format!("unknown learner tag {other}"))),
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn dim_u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v)
            .map_err(|_| Error::InvalidArgument(format!("{v} does not fit the model format")))?;
        self.u32(v);
        Ok(())
    }
    fn matrix_row_major(&mut self, m: &DMatrix<f64>) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated {
            expected: usize::MAX,
            actual: self.bytes.len(),
        })?;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end,
                actual: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::CorruptModel(format!("size {v} too large")))
    }
    /// Reads `rows × cols` f64 values after checking they are present, so
    /// a corrupt size cannot trigger a huge allocation.
    fn matrix_row_major(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let len = rows
            .checked_mul(cols)
            .and_then(|v| v.checked_mul(8))
            .ok_or_else(|| Error::CorruptModel(format!("matrix {rows}x{cols} too large")))?;
        let raw = self.take(len)?;
        Ok(DMatrix::from_row_iterator(
            rows,
            cols,
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        ))
    }
}

impl ModelBundle {
    pub fn new(pca: Option<PcaModel>, cascade: CascadeModel) -> Result<Self> {
        if let Some(p) = &pca {
            if p.output_dim() != cascade.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: cascade.input_dim(),
                    actual: p.output_dim(),
                });
            }
        }
        Ok(Self { pca, cascade })
    }

    /// Dimensionality of raw features fed to the bundle.
    pub fn input_dim(&self) -> usize {
        self.pca
            .as_ref()
            .map_or(self.cascade.input_dim(), PcaModel::input_dim)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let c = &self.cascade;
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MODEL_MAGIC);
        w.u32(FORMAT_VERSION);
        let metric = c.final_metric();
        w.u8(tag_byte(c.learner().tag()));
        w.f64(c.learner().lambda().unwrap_or(0.0));
        w.f64(metric.rho().unwrap_or(f64::NAN));
        w.u64(c.seed());
        w.u64(c.input_dim() as u64);
        w.dim_u32(c.stages().len())?;
        for stage in c.stages() {
            w.dim_u32(stage.group_count())?;
            w.dim_u32(stage.group_dim())?;
            for &p in stage.permutation() {
                w.u32(p);
            }
            for proj in stage.projections() {
                w.matrix_row_major(proj.matrix());
            }
            for proj in stage.projections() {
                w.dim_u32(proj.clamped_count())?;
            }
        }
        w.u64(metric.dim() as u64);
        w.matrix_row_major(metric.matrix());
        match &self.pca {
            None => w.u8(0),
            Some(p) => {
                w.u8(1);
                w.u64(p.input_dim() as u64);
                w.u64(p.output_dim() as u64);
                for &m in p.mean() {
                    w.f64(m);
                }
                w.matrix_row_major(p.basis());
            }
        }
        Ok(w.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::CorruptModel("bad magic, expected ECML".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::CorruptModel(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let tag = tag_from_byte(r.u8()?)?;
        let lambda = r.f64()?;
        let rho = r.f64()?;
        let seed = r.u64()?;
        let input_dim = r.usize()?;
        let n_stages = r.u32()? as usize;

        let mut stages = Vec::with_capacity(n_stages.min(64));
        let mut dim = input_dim;
        for _ in 0..n_stages {
            let groups = r.u32()? as usize;
            let group_dim = r.u32()? as usize;
            let padded = groups
                .checked_mul(group_dim)
                .ok_or_else(|| Error::CorruptModel("stage shape overflows".into()))?;
            let raw_perm = r.take(
                padded
                    .checked_mul(4)
                    .ok_or_else(|| Error::CorruptModel("stage shape overflows".into()))?,
            )?;
            let permutation = raw_perm
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let mut matrices = Vec::with_capacity(groups.min(1 << 16));
            for _ in 0..groups {
                matrices.push(r.matrix_row_major(group_dim, group_dim)?);
            }
            let mut projections = Vec::with_capacity(matrices.len());
            for m in matrices {
                projections.push(Projection::from_parts(m, r.u32()? as usize)?);
            }
            let stage = StageModel::from_parts(dim, permutation, group_dim, projections)?;
            dim = stage.output_dim();
            stages.push(stage);
        }

        let final_dim = r.usize()?;
        let matrix = r.matrix_row_major(final_dim, final_dim)?;
        let rho = if rho.is_nan() { None } else { Some(rho) };
        let learner = Learner::from_tag(tag, lambda);
        let final_metric = MetricModel::new(matrix, tag, learner.lambda(), rho)?;
        let cascade = CascadeModel::from_parts(input_dim, seed, learner, stages, final_metric)?;

        let pca = match r.u8()? {
            0 => None,
            1 => {
                let d = r.usize()?;
                let k = r.usize()?;
                let mean = r.matrix_row_major(1, d)?.iter().copied().collect();
                let basis = r.matrix_row_major(d, k)?;
                Some(PcaModel::from_parts(mean, basis)?)
            }
            other => return Err(Error::CorruptModel(format!("bad pca flag {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::CorruptModel(format!(
                "{} trailing bytes after model",
                bytes.len() - r.pos
            )));
        }
        ModelBundle::new(pca, cascade).map_err(|e| Error::CorruptModel(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
