use std::sync::Arc;

use crate::codec::{self, CodecError};
use crate::hash::Digest;

pub(crate) const TAG_LEAF: u8 = 0x00;
pub(crate) const TAG_BRANCH: u8 = 0x01;
pub(crate) const TAG_EXTENSION: u8 = 0x02;

/// A node together with the digest of its canonical serialization. Nodes are
/// immutable and shared between snapshots.
#[derive(Debug)]
pub(crate) struct Hashed {
    pub node: Node,
    pub hash: Digest,
}

pub(crate) type NodeRef = Arc<Hashed>;

#[derive(Debug)]
pub(crate) enum Node {
    Leaf { path: Vec<u8>, value: Vec<u8> },
    /// `path` is never empty and `child` is always a branch.
    Extension { path: Vec<u8>, child: NodeRef },
    Branch { children: [Option<NodeRef>; 16], value: Option<Vec<u8>> },
}

impl Node {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Node::Leaf { path, value } => codec::encode_fields(TAG_LEAF, &[path.as_slice(), value]),
            Node::Extension { path, child } => {
                codec::encode_fields(TAG_EXTENSION, &[path.as_slice(), child.hash.as_bytes()])
            }
            Node::Branch { children, value } => {
                let mut fields: Vec<&[u8]> = children
                    .iter()
                    .map(|c| c.as_ref().map_or(&[][..], |c| c.hash.as_bytes().as_slice()))
                    .collect();
                // A branch value is signalled by a 17th field, so an empty
                // value stays distinguishable from no value.
                if let Some(v) = value {
                    fields.push(v);
                }
                codec::encode_fields(TAG_BRANCH, &fields)
            }
        }
    }

    pub fn seal(self) -> NodeRef {
        let hash = Digest::of(&self.encode());
        Arc::new(Hashed { node: self, hash })
    }
}

/// A node as seen by a proof verifier: child references are bare digests.
#[derive(Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub(crate) enum DecodedNode {
    Leaf { path: Vec<u8>, value: Vec<u8> },
    Extension { path: Vec<u8>, child: Digest },
    Branch { children: [Option<Digest>; 16], value: Option<Vec<u8>> },
}

pub(crate) fn decode(bytes: &[u8]) -> Result<DecodedNode, CodecError> {
    let (tag, fields) = codec::decode_fields(bytes)?;
    let nibbles = |index: usize| -> Result<Vec<u8>, CodecError> {
        let p = fields[index];
        if p.iter().any(|&n| n > 0x0f) {
            return Err(CodecError::FieldLength { index, len: p.len() });
        }
        Ok(p.to_vec())
    };
    match tag {
        TAG_LEAF => {
            if fields.len() != 2 {
                return Err(CodecError::FieldCount { expected: 2, found: fields.len() });
            }
            Ok(DecodedNode::Leaf { path: nibbles(0)?, value: fields[1].to_vec() })
        }
        TAG_EXTENSION => {
            if fields.len() != 2 {
                return Err(CodecError::FieldCount { expected: 2, found: fields.len() });
            }
            let path = nibbles(0)?;
            if path.is_empty() {
                return Err(CodecError::FieldLength { index: 0, len: 0 });
            }
            Ok(DecodedNode::Extension { path, child: Digest(codec::fixed::<32>(&fields, 1)?) })
        }
        TAG_BRANCH => {
            if fields.len() != 16 && fields.len() != 17 {
                return Err(CodecError::FieldCount { expected: 16, found: fields.len() });
            }
            let mut children = [None; 16];
            for (i, slot) in children.iter_mut().enumerate() {
                *slot = match fields[i].len() {
                    0 => None,
                    32 => Some(Digest(codec::fixed::<32>(&fields, i)?)),
                    len => return Err(CodecError::FieldLength { index: i, len }),
                };
            }
            let value = fields.get(16).map(|v| v.to_vec());
            Ok(DecodedNode::Branch { children, value })
        }
        found => Err(CodecError::Tag { expected: TAG_LEAF, found }),
    }
}

pub(crate) fn to_nibbles(key: &[u8]) -> Vec<u8> {
    key.iter().flat_map(|b| [b >> 4, b & 0x0f]).collect()
}

pub(crate) fn from_nibbles(nibbles: &[u8]) -> Vec<u8> {
    debug_assert!(nibbles.len().is_multiple_of(2));
    nibbles.chunks(2).map(|c| (c[0] << 4) | c[1]).collect()
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn empty_children() -> [Option<NodeRef>; 16] {
    Default::default()
}

/// Places `value` at `rest` below a fresh branch slot: either as the
/// branch's own value or as a leaf child.
fn place(children: &mut [Option<NodeRef>; 16], branch_value: &mut Option<Vec<u8>>, rest: &[u8], value: Vec<u8>) {
    match rest.split_first() {
        None => *branch_value = Some(value),
        Some((&nib, tail)) => {
            children[nib as usize] = Some(Node::Leaf { path: tail.to_vec(), value }.seal());
        }
    }
}

fn wrap_extension(prefix: &[u8], branch: NodeRef) -> NodeRef {
    if prefix.is_empty() {
        branch
    } else {
        Node::Extension { path: prefix.to_vec(), child: branch }.seal()
    }
}

/// Returns a new subtree with `path → value` inserted; `node` is untouched.
/// Returns whether the key was newly added.
pub(crate) fn insert(node: Option<&NodeRef>, path: &[u8], value: Vec<u8>) -> (NodeRef, bool) {
    let Some(node) = node else {
        return (Node::Leaf { path: path.to_vec(), value }.seal(), true);
    };
    match &node.node {
        Node::Leaf { path: lp, value: lv } => {
            if lp.as_slice() == path {
                return (Node::Leaf { path: path.to_vec(), value }.seal(), false);
            }
            let c = common_prefix(lp, path);
            let mut children = empty_children();
            let mut bvalue = None;
            place(&mut children, &mut bvalue, &lp[c..], lv.clone());
            place(&mut children, &mut bvalue, &path[c..], value);
            let branch = Node::Branch { children, value: bvalue }.seal();
            (wrap_extension(&path[..c], branch), true)
        }
        Node::Extension { path: ep, child } => {
            let c = common_prefix(ep, path);
            if c == ep.len() {
                let (child, added) = insert(Some(child), &path[c..], value);
                return (Node::Extension { path: ep.clone(), child }.seal(), added);
            }
            let mut children = empty_children();
            let mut bvalue = None;
            let tail = &ep[c + 1..];
            children[ep[c] as usize] = Some(if tail.is_empty() {
                child.clone()
            } else {
                Node::Extension { path: tail.to_vec(), child: child.clone() }.seal()
            });
            place(&mut children, &mut bvalue, &path[c..], value);
            let branch = Node::Branch { children, value: bvalue }.seal();
            (wrap_extension(&path[..c], branch), true)
        }
        Node::Branch { children, value: bvalue } => {
            let mut children = children.clone();
            let mut bvalue = bvalue.clone();
            let added = match path.split_first() {
                None => bvalue.replace(value).is_none(),
                Some((&nib, tail)) => {
                    let (child, added) = insert(children[nib as usize].as_ref(), tail, value);
                    children[nib as usize] = Some(child);
                    added
                }
            };
            (Node::Branch { children, value: bvalue }.seal(), added)
        }
    }
}

pub(crate) fn lookup<'a>(mut node: &'a NodeRef, mut path: &[u8]) -> Option<&'a [u8]> {
    loop {
        match &node.node {
            Node::Leaf { path: lp, value } => return (lp.as_slice() == path).then_some(value.as_slice()),
            Node::Extension { path: ep, child } => {
                path = path.strip_prefix(ep.as_slice())?;
                node = child;
            }
            Node::Branch { children, value } => match path.split_first() {
                None => return value.as_deref(),
                Some((&nib, tail)) => {
                    node = children[nib as usize].as_ref()?;
                    path = tail;
                }
            },
        }
    }
}

/// Encodings of every node from `node` down to the one holding `path`.
pub(crate) fn path_encodings(mut node: &NodeRef, mut path: &[u8]) -> Option<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    loop {
        out.push(node.node.encode());
        match &node.node {
            Node::Leaf { path: lp, .. } => return (lp.as_slice() == path).then_some(out),
            Node::Extension { path: ep, child } => {
                path = path.strip_prefix(ep.as_slice())?;
                node = child;
            }
            Node::Branch { children, value } => match path.split_first() {
                None => return value.is_some().then_some(out),
                Some((&nib, tail)) => {
                    node = children[nib as usize].as_ref()?;
                    path = tail;
                }
            },
        }
    }
}

pub(crate) fn collect(node: &NodeRef, prefix: &mut Vec<u8>, out: &mut Vec<(Vec<u8>, Vec<u8>)>) {
    match &node.node {
        Node::Leaf { path, value } => {
            let len = prefix.len();
            prefix.extend_from_slice(path);
            out.push((from_nibbles(prefix), value.clone()));
            prefix.truncate(len);
        }
        Node::Extension { path, child } => {
            let len = prefix.len();
            prefix.extend_from_slice(path);
            collect(child, prefix, out);
            prefix.truncate(len);
        }
        Node::Branch { children, value } => {
            if let Some(v) = value {
                out.push((from_nibbles(prefix), v.clone()));
            }
            for (nib, child) in children.iter().enumerate() {
                if let Some(child) = child {
                    prefix.push(nib as u8);
                    collect(child, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
}
