use serde::{Deserialize, Serialize};

use super::node::{self, DecodedNode};
use crate::hash::Digest;

/// Membership proof for one key: the canonical encodings of every node on
/// the path from the root to the node holding the value. Each step's digest
/// must match the child reference recorded in the step above it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    #[serde(with = "serde_nodes")]
    pub nodes: Vec<Vec<u8>>,
}

impl InclusionProof {
    /// Checks that `key → value` is committed under `root`. Pure function of
    /// its inputs; malformed proofs verify as `false`.
    pub fn verify(&self, root: &Digest, key: &[u8], value: &[u8]) -> bool {
        let path = node::to_nibbles(key);
        let mut rest = path.as_slice();
        let mut expected = *root;
        let last = self.nodes.len().saturating_sub(1);
        for (i, enc) in self.nodes.iter().enumerate() {
            if Digest::of(enc) != expected {
                return false;
            }
            let Ok(decoded) = node::decode(enc) else {
                return false;
            };
            match decoded {
                DecodedNode::Leaf { path: lp, value: lv } => {
                    return i == last && lp.as_slice() == rest && lv.as_slice() == value;
                }
                DecodedNode::Extension { path: ep, child } => {
                    let Some(tail) = rest.strip_prefix(ep.as_slice()) else {
                        return false;
                    };
                    rest = tail;
                    expected = child;
                }
                DecodedNode::Branch { children, value: bv } => match rest.split_first() {
                    None => return i == last && bv.as_deref() == Some(value),
                    Some((&nib, tail)) => {
                        let Some(child) = children[nib as usize] else {
                            return false;
                        };
                        rest = tail;
                        expected = child;
                    }
                },
            }
        }
        false
    }
}

mod serde_nodes {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::hexfmt;

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|n| hexfmt::encode_prefixed(n)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| hexfmt::parse_bytes(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
