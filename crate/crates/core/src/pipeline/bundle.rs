//! Binary model bundle. See `docs/bundle-format.md` for the layout.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::ThresholdPair;
use crate::occ::{
    brm::{BrmMember, BrmModel},
    iforest::{IForestModel, Node},
    ocsvm::OcSvmModel,
    OccModel,
};
use crate::pipeline::RunConfig;
use crate::preprocess::{PcaModel, Preprocessor, RobustScalerModel};

const MAGIC: &[u8; 8] = b"GLBUNDLE";
const VERSION: u32 = 1;

/// Validation figures stored at calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSummary {
    pub auc_g: f64,
    pub auc_w: f64,
    pub mf_v: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub seed: u64,
    pub nu: f64,
    pub model: OccModel,
    pub thresholds: Option<ThresholdPair>,
    pub validation: Option<ValidationSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub config_hash: [u8; 32],
    pub config: RunConfig,
    pub feature_names: Vec<String>,
    pub preprocessor: Preprocessor,
    pub models: Vec<TrainedModel>,
    /// Index of the model chosen at calibration.
    pub selected: Option<usize>,
}

impl Bundle {
    pub fn is_calibrated(&self) -> bool {
        self.selected.is_some() && self.models.iter().all(|m| m.thresholds.is_some())
    }

    /// Fails unless `cfg` has the same model hash as the bundle.
    pub fn check_config(&self, cfg: &RunConfig) -> Result<()> {
        if cfg.model_hash() != self.config_hash {
            return Err(Error::Bundle(format!(
                "config hash mismatch: bundle {} vs config {}",
                hex(&self.config_hash),
                hex(&cfg.model_hash())
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let config = serde_json::to_vec(&self.config).expect("config serializes");
        section(&mut out, b"HASH", &self.config_hash);
        section(&mut out, b"CONF", &config);
        let mut w = Writer::default();
        w.u32(self.feature_names.len() as u32);
        for n in &self.feature_names {
            w.str(n);
        }
        section(&mut out, b"FEAT", &w.0);
        let mut w = Writer::default();
        w.preprocessor(&self.preprocessor);
        section(&mut out, b"PREP", &w.0);
        for m in &self.models {
            let mut w = Writer::default();
            w.trained(m);
            section(&mut out, b"MODL", &w.0);
        }
        if let Some(s) = self.selected {
            section(&mut out, b"SELE", &(s as u32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != MAGIC {
            return Err(Error::Bundle("not a bundle file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Bundle(format!("unsupported bundle version {version}")));
        }
        let mut hash = None;
        let mut config = None;
        let mut names = None;
        let mut prep = None;
        let mut models = Vec::new();
        let mut selected = None;
        while !r.is_empty() {
            let tag: [u8; 4] = r.take(4)?.try_into().expect("four bytes");
            let len = r.u64()? as usize;
            let mut body = Reader::new(r.take(len)?);
            match &tag {
                b"HASH" => hash = Some(body.take(32)?.try_into().expect("32 bytes")),
                b"CONF" => config = Some(serde_json::from_slice::<RunConfig>(body.take(len)?)?),
                b"FEAT" => {
                    let n = body.u32()? as usize;
                    names = Some((0..n).map(|_| body.str()).collect::<Result<Vec<_>>>()?);
                }
                b"PREP" => prep = Some(body.preprocessor()?),
                b"MODL" => models.push(body.trained()?),
                b"SELE" => selected = Some(body.u32()? as usize),
                _ => {
                    return Err(Error::Bundle(format!(
                        "unknown section `{}`",
                        String::from_utf8_lossy(&tag)
                    )))
                }
            }
            if !body.is_empty() {
                return Err(Error::Bundle("trailing bytes in section".into()));
            }
        }
        let missing = |what: &str| Error::Bundle(format!("missing {what} section"));
        let bundle = Bundle {
            config_hash: hash.ok_or_else(|| missing("HASH"))?,
            config: config.ok_or_else(|| missing("CONF"))?,
            feature_names: names.ok_or_else(|| missing("FEAT"))?,
            preprocessor: prep.ok_or_else(|| missing("PREP"))?,
            models,
            selected,
        };
        if bundle.models.is_empty() {
            return Err(missing("MODL"));
        }
        if bundle.preprocessor.input_dim() != bundle.feature_names.len() {
            return Err(Error::Bundle("preprocessor does not match the feature names".into()));
        }
        let dim = bundle.preprocessor.output_dim();
        if bundle.models.iter().any(|m| m.model.input_dim() != dim) {
            return Err(Error::Bundle("model dimension does not match the preprocessor".into()));
        }
        if bundle.selected.is_some_and(|s| s >= bundle.models.len()) {
            return Err(Error::Bundle("selected model out of range".into()));
        }
        bundle.check_config(&bundle.config)?;
        Ok(bundle)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

#[derive(Default)]
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

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        self.u32(v.len() as u32);
        for &x in v {
            self.f64(x);
        }
    }

    fn rows(&mut self, rows: &[Vec<f64>]) {
        self.u32(rows.len() as u32);
        for r in rows {
            self.f64s(r);
        }
    }

    fn preprocessor(&mut self, p: &Preprocessor) {
        match p {
            Preprocessor::Identity { dim } => {
                self.u8(0);
                self.u32(*dim as u32);
            }
            Preprocessor::RobustScaler(m) => {
                self.u8(1);
                self.f64s(&m.medians);
                self.f64s(&m.lower_spreads);
                self.f64s(&m.upper_spreads);
            }
            Preprocessor::Pca(m) => {
                self.u8(2);
                self.f64s(&m.mean);
                self.rows(&m.components);
                self.f64s(&m.explained_variance_fracs);
            }
        }
    }

    fn trained(&mut self, t: &TrainedModel) {
        self.u64(t.seed);
        self.f64(t.nu);
        match t.thresholds {
            Some(th) => {
                self.u8(1);
                self.f64(th.t_e);
                self.f64(th.t_w);
            }
            None => self.u8(0),
        }
        match t.validation {
            Some(v) => {
                self.u8(1);
                self.f64(v.auc_g);
                self.f64(v.auc_w);
                self.u64(v.mf_v as u64);
            }
            None => self.u8(0),
        }
        match &t.model {
            OccModel::Ocsvm(m) => {
                self.u8(0);
                self.u32(m.dim as u32);
                self.f64(m.gamma);
                self.f64(m.rho);
                self.rows(&m.support);
                self.f64s(&m.alphas);
                self.u64(m.n_train as u64);
                self.u64(m.iterations as u64);
            }
            OccModel::Iforest(m) => {
                self.u8(1);
                self.u32(m.dim as u32);
                self.u64(m.subsample as u64);
                self.u32(m.trees.len() as u32);
                for tree in &m.trees {
                    self.u32(tree.len() as u32);
                    for node in tree {
                        match *node {
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => {
                                self.u8(0);
                                self.u32(feature as u32);
                                self.f64(threshold);
                                self.u32(left as u32);
                                self.u32(right as u32);
                            }
                            Node::Leaf { size } => {
                                self.u8(1);
                                self.u64(size as u64);
                            }
                        }
                    }
                }
            }
            OccModel::Brm(m) => {
                self.u8(2);
                self.rows(&m.train);
                self.u32(m.members.len() as u32);
                for mem in &m.members {
                    self.f64(mem.sigma);
                    self.u32(mem.indices.len() as u32);
                    for &i in &mem.indices {
                        self.u32(i as u32);
                    }
                }
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, at: 0 }
    }

    fn is_empty(&self) -> bool {
        self.at == self.bytes.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::Bundle("truncated bundle".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Bundle("count overflow".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Bundle("invalid UTF-8 string".into()))
    }

    /// Reads a u32 count, rejecting counts the remaining bytes cannot hold.
    fn count(&mut self, min_item_bytes: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_bytes) > self.bytes.len() - self.at {
            return Err(Error::Bundle("truncated bundle".into()));
        }
        Ok(n)
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn rows(&mut self) -> Result<Vec<Vec<f64>>> {
        let n = self.count(4)?;
        (0..n).map(|_| self.f64s()).collect()
    }

    fn preprocessor(&mut self) -> Result<Preprocessor> {
        Ok(match self.u8()? {
            0 => Preprocessor::Identity {
                dim: self.u32()? as usize,
            },
            1 => Preprocessor::RobustScaler(RobustScalerModel {
                medians: self.f64s()?,
                lower_spreads: self.f64s()?,
                upper_spreads: self.f64s()?,
            }),
            2 => Preprocessor::Pca(PcaModel {
                mean: self.f64s()?,
                components: self.rows()?,
                explained_variance_fracs: self.f64s()?,
            }),
            k => return Err(Error::Bundle(format!("unknown preprocessor kind {k}"))),
        })
    }

    fn trained(&mut self) -> Result<TrainedModel> {
        let seed = self.u64()?;
        let nu = self.f64()?;
        let thresholds = match self.u8()? {
            0 => None,
            _ => Some(ThresholdPair::new(self.f64()?, self.f64()?)?),
        };
        let validation = match self.u8()? {
            0 => None,
            _ => Some(ValidationSummary {
                auc_g: self.f64()?,
                auc_w: self.f64()?,
                mf_v: self.usize()?,
            }),
        };
        let model = match self.u8()? {
            0 => OccModel::Ocsvm(OcSvmModel {
                dim: self.u32()? as usize,
                gamma: self.f64()?,
                rho: self.f64()?,
                support: self.rows()?,
                alphas: self.f64s()?,
                n_train: self.usize()?,
                iterations: self.usize()?,
            }),
            1 => {
                let dim = self.u32()? as usize;
                let subsample = self.usize()?;
                let n_trees = self.count(4)?;
                let mut trees = Vec::with_capacity(n_trees);
                for _ in 0..n_trees {
                    let n = self.count(9)?;
                    let mut nodes = Vec::with_capacity(n);
                    for _ in 0..n {
                        nodes.push(match self.u8()? {
                            0 => Node::Split {
                                feature: self.u32()? as usize,
                                threshold: self.f64()?,
                                left: self.u32()? as usize,
                                right: self.u32()? as usize,
                            },
                            1 => Node::Leaf { size: self.usize()? },
                            k => return Err(Error::Bundle(format!("unknown node kind {k}"))),
                        });
                    }
                    check_tree(&nodes, dim)?;
                    trees.push(nodes);
                }
                OccModel::Iforest(IForestModel {
                    dim,
                    subsample,
                    trees,
                })
            }
            2 => {
                let train = self.rows()?;
                let n_members = self.count(12)?;
                let mut members = Vec::with_capacity(n_members);
                for _ in 0..n_members {
                    let sigma = self.f64()?;
                    let n = self.count(4)?;
                    let indices = (0..n)
                        .map(|_| Ok(self.u32()? as usize))
                        .collect::<Result<Vec<_>>>()?;
                    if indices.iter().any(|&i| i >= train.len()) {
                        return Err(Error::Bundle("BRM index out of range".into()));
                    }
                    members.push(BrmMember { indices, sigma });
                }
                OccModel::Brm(BrmModel { train, members })
            }
            k => return Err(Error::Bundle(format!("unknown model kind {k}"))),
        };
        check_model(&model)?;
        Ok(TrainedModel {
            seed,
            nu,
            model,
            thresholds,
            validation,
        })
    }
}

/// Child links must point forward so that scoring terminates.
fn check_tree(nodes: &[Node], dim: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Bundle("empty tree".into()));
    }
    for (i, n) in nodes.iter().enumerate() {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = *n
        {
            if feature >= dim || left <= i || right <= i || left >= nodes.len() || right >= nodes.len() {
                return Err(Error::Bundle("malformed isolation tree".into()));
            }
        }
    }
    Ok(())
}

fn check_model(model: &OccModel) -> Result<()> {
    let ok = match model {
        OccModel::Ocsvm(m) => {
            m.support.len() == m.alphas.len() && m.support.iter().all(|s| s.len() == m.dim)
        }
        OccModel::Iforest(m) => !m.trees.is_empty(),
        OccModel::Brm(m) => {
            !m.train.is_empty()
                && !m.members.is_empty()
                && m.train.iter().all(|r| r.len() == m.train[0].len())
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Bundle(format!(
            "inconsistent {} model",
            model.kind()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occ::{fit, OccConfig, OccKind};

    fn bundle(kind: OccKind) -> Bundle {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect();
        let cfg = RunConfig {
            model: kind,
            ..Default::default()
        };
        let occ = OccConfig {
            ensemble_size: 5,
            ..Default::default()
        };
        Bundle {
            config_hash: cfg.model_hash(),
            config: cfg,
            feature_names: vec!["a".into(), "b".into()],
            preprocessor: Preprocessor::RobustScaler(RobustScalerModel {
                medians: vec![0.0, 1.0],
                lower_spreads: vec![1.0, 0.5],
                upper_spreads: vec![2.0, 0.5],
            }),
            models: vec![TrainedModel {
                seed: 7,
                nu: 0.1,
                model: fit(kind, &x, &occ).unwrap(),
                thresholds: Some(ThresholdPair::new(1.0, 2.0).unwrap()),
                validation: Some(ValidationSummary {
                    auc_g: 0.9,
                    auc_w: 0.8,
                    mf_v: 1,
                }),
            }],
            selected: Some(0),
        }
    }

    #[test]
    fn roundtrip_all_kinds() {
        for kind in OccKind::ALL {
            let b = bundle(kind);
            let bytes = b.to_bytes();
            assert_eq!(Bundle::from_bytes(&bytes).unwrap(), b);
            assert_eq!(Bundle::from_bytes(&bytes).unwrap().to_bytes(), bytes);
        }
    }

    #[test]
    fn corrupt_bundles_rejected() {
        let bytes = bundle(OccKind::Iforest).to_bytes();
        assert!(Bundle::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Bundle::from_bytes(b"NOTABUNDLE").is_err());
        let mut other = bundle(OccKind::Iforest);
        other.config_hash[0] ^= 1;
        assert!(Bundle::from_bytes(&other.to_bytes()).is_err());
        let mut other = bundle(OccKind::Ocsvm);
        other.feature_names.push("extra".into());
        assert!(Bundle::from_bytes(&other.to_bytes()).is_err());
    }

    #[test]
    fn config_check() {
        let b = bundle(OccKind::Brm);
        assert!(b.check_config(&b.config).is_ok());
        let mut cfg = b.config.clone();
        cfg.occ.ensemble_size += 1;
        assert!(b.check_config(&cfg).is_err());
    }
}
