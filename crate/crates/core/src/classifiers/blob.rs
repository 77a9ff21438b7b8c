//! Versioned little-endian binary encoding of trained annotator models.
//!
//! Layout: `AMDL`, u16 version, u8 family tag, u8 params tag, u16 + UTF-8
//! annotator id, u32 dim, u8 class count + class values, then the payload of
//! the params variant.

use ndarray::Array2;

use super::forest::{ForestParams, Node, Tree};
use super::mlp::{MlpParams, MlpShape};
use super::svm::{PairModel, SvmParams};
use super::{AnnotatorModel, Classifier, Family, ModelParams};
use crate::corpus::{AnnotatorId, Label};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AMDL";
pub const VERSION: u16 = 1;

const TAG_CONSTANT: u8 = 0;
const TAG_MLP: u8 = 1;
const TAG_SVM: u8 = 2;
const TAG_FOREST: u8 = 3;
const NODE_LEAF: u8 = 0;
const NODE_SPLIT: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("model section exceeds u32 entries"));
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.len(vs.len());
        vs.iter().for_each(|v| self.f64(*v));
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.at)))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// Length prefix, checked against the bytes left so a corrupt count
    /// cannot trigger a huge allocation.
    fn len(&mut self, min_item: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item) > self.bytes.len() - self.at {
            return Err(Error::ModelFormat(format!("length {n} exceeds remaining bytes")));
        }
        Ok(n)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn encode(m: &AnnotatorModel) -> Vec<u8> {
    let c = &m.classifier;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(VERSION);
    w.u8(c.family.tag());
    w.u8(match c.params {
        ModelParams::Constant => TAG_CONSTANT,
        ModelParams::Mlp(_) => TAG_MLP,
        ModelParams::Svm(_) => TAG_SVM,
        ModelParams::Forest(_) => TAG_FOREST,
    });
    let id = m.annotator.as_str().as_bytes();
    w.u16(u16::try_from(id.len()).expect("annotator id exceeds 65535 bytes"));
    w.0.extend_from_slice(id);
    w.len(c.dim);
    w.u8(c.classes.len() as u8);
    c.classes.iter().for_each(|l| w.u8(l.value()));

    match &c.params {
        ModelParams::Constant => {}
        ModelParams::Mlp(p) => {
            w.len(p.shape.hidden);
            w.f64s(&p.params);
        }
        ModelParams::Svm(p) => {
            w.f64(p.gamma);
            w.len(p.support.nrows());
            p.support.iter().for_each(|v| w.f64(*v));
            w.len(p.pairs.len());
            for pair in &p.pairs {
                w.u8(pair.positive as u8);
                w.u8(pair.negative as u8);
                w.f64(pair.rho);
                w.len(pair.coef.len());
                for &(s, coef) in &pair.coef {
                    w.u32(s);
                    w.f64(coef);
                }
            }
        }
        ModelParams::Forest(p) => {
            w.len(p.trees.len());
            for tree in &p.trees {
                w.len(tree.nodes.len());
                for node in &tree.nodes {
                    match node {
                        Node::Leaf { dist } => {
                            w.u8(NODE_LEAF);
                            w.f64s(dist);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            w.u8(NODE_SPLIT);
                            w.u32(*feature);
                            w.f64(*threshold);
                            w.u32(*left);
                            w.u32(*right);
                        }
                    }
                }
            }
        }
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<AnnotatorModel> {
    let mut r = Reader { bytes, at: 0 };
    let magic = r.take(4).map_err(|_| Error::ModelFormat("missing magic".into()))?;
    if magic != MAGIC {
        return Err(Error::ModelFormat(format!("bad magic {magic:?}")));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let family_tag = r.u8()?;
    let family = Family::from_tag(family_tag).ok_or_else(|| Error::ModelFormat(format!("unknown family tag {family_tag}")))?;
    let params_tag = r.u8()?;
    let id_len = r.u16()? as usize;
    let id = std::str::from_utf8(r.take(id_len)?).map_err(|e| Error::ModelFormat(format!("annotator id: {e}")))?;
    let annotator = AnnotatorId::new(id).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let dim = r.u32()? as usize;
    let n_classes = r.u8()? as usize;
    let classes = (0..n_classes)
        .map(|_| {
            let v = r.u8()?;
            Label::new(v).map_err(|_| Error::ModelFormat(format!("class value {v}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if classes.is_empty() || classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ModelFormat("classes must be non-empty and strictly increasing".into()));
    }

    let params = match params_tag {
        TAG_CONSTANT => ModelParams::Constant,
        TAG_MLP => {
            let hidden = r.u32()? as usize;
            let params = r.f64s()?;
            let shape = MlpShape {
                inputs: dim,
                hidden,
                outputs: n_classes,
            };
            if params.len() != shape.n_params() {
                return Err(Error::ModelFormat(format!(
                    "{} weights for a {dim}-{hidden}-{n_classes} network",
                    params.len()
                )));
            }
            ModelParams::Mlp(MlpParams { shape, params })
        }
        TAG_SVM => {
            let gamma = r.f64()?;
            let n_support = r.len(8 * dim.max(1))?;
            let values = (0..n_support * dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let support = Array2::from_shape_vec((n_support, dim), values).map_err(|e| Error::ModelFormat(e.to_string()))?;
            let n_pairs = r.len(14)?;
            let pairs = (0..n_pairs)
                .map(|_| {
                    let positive = r.u8()? as usize;
                    let negative = r.u8()? as usize;
                    let rho = r.f64()?;
                    let n_coef = r.len(12)?;
                    let coef = (0..n_coef)
                        .map(|_| {
                            let s = r.u32()?;
                            if s as usize >= n_support {
                                return Err(Error::ModelFormat(format!("support index {s} out of range")));
                            }
                            Ok((s, r.f64()?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if positive >= n_classes || negative >= n_classes {
                        return Err(Error::ModelFormat("pair class out of range".into()));
                    }
                    Ok(PairModel {
                        positive,
                        negative,
                        rho,
                        coef,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ModelParams::Svm(SvmParams { gamma, support, pairs })
        }
        TAG_FOREST => {
            let n_trees = r.len(4)?;
            let trees = (0..n_trees)
                .map(|_| {
                    let n_nodes = r.len(5)?;
                    let nodes = (0..n_nodes)
                        .map(|_| match r.u8()? {
                            NODE_LEAF => {
                                let dist = r.f64s()?;
                                if dist.len() != n_classes {
                                    return Err(Error::ModelFormat("leaf distribution length".into()));
                                }
                                Ok(Node::Leaf { dist })
                            }
                            NODE_SPLIT => Ok(Node::Split {
                                feature: r.u32()?,
                                threshold: r.f64()?,
                                left: r.u32()?,
                                right: r.u32()?,
                            }),
                            t => Err(Error::ModelFormat(format!("unknown node tag {t}"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    check_tree(&nodes, dim)?;
                    Ok(Tree { nodes })
                })
                .collect::<Result<Vec<_>>>()?;
            ModelParams::Forest(ForestParams { n_classes, trees })
        }
        t => return Err(Error::ModelFormat(format!("unknown params tag {t}"))),
    };
    if r.at != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    Ok(AnnotatorModel {
        annotator,
        classifier: Classifier {
            family,
            dim,
            classes,
            params,
        },
    })
}

/// Children must point forward so traversal always terminates.
fn check_tree(nodes: &[Node], dim: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::ModelFormat("empty tree".into()));
    }
    for (i, node) in nodes.iter().enumerate() {
        if let Node::Split {
            feature, left, right, ..
        } = node
        {
            let ok = |c: u32| (c as usize) > i && (c as usize) < nodes.len();
            if *feature as usize >= dim || !ok(*left) || !ok(*right) {
                return Err(Error::ModelFormat(format!("malformed split at node {i}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{compute_class_weights, train_forest, train_mlp, train_svm, ForestConfig, MlpConfig, SvmConfig};
    use crate::corpus::count_labels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> (Array2<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| Label::new(if r[0] + r[1] > 0.0 { 1 } else if r[2] > 0.3 { 3 } else { 0 }).unwrap())
            .collect();
        (x, y)
    }

    fn round_trip(c: Classifier) {
        let m = AnnotatorModel {
            annotator: AnnotatorId::new("ann-7").unwrap(),
            classifier: c,
        };
        let bytes = encode(&m);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, m);
        for cut in [0, 3, 7, bytes.len() / 2, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err());
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }

    #[test]
    fn every_family_round_trips() {
        let (x, y) = data();
        let w = compute_class_weights(&count_labels(y.iter().copied())).unwrap();
        round_trip(Classifier::constant(Family::Mlp, 3, Label::new(4).unwrap()));
        let mlp = MlpConfig {
            hidden_size: 64,
            max_epochs: 5,
            ..MlpConfig::default()
        };
        round_trip(train_mlp(x.view(), &y, &mlp).unwrap());
        round_trip(train_svm(x.view(), &y, &SvmConfig::default(), &w).unwrap());
        let rf = ForestConfig {
            n_estimators: 10,
            max_depth: 5,
            seed: 1,
        };
        round_trip(train_forest(x.view(), &y, &rf, &w).unwrap());
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(matches!(decode(b"EMB1\x01\x00"), Err(Error::ModelFormat(_))));
        let m = AnnotatorModel {
            annotator: AnnotatorId::new("a").unwrap(),
            classifier: Classifier::constant(Family::Svm, 2, Label::new(0).unwrap()),
        };
        let mut bytes = encode(&m);
        bytes[4] = 9;
        assert!(decode(&bytes).is_err());
    }
}
