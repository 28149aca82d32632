use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::{kmeans, BitCode, Code, EmbeddingSet, ProtoNode, SumTree, TreeError, TreeKind, TreeParams};
use crate::annotation::AttrId;

/// Builds the meaning tree by recursive k-means into `2^c` clusters.
///
/// A node holding at most `2^c` keywords gets one leaf child per keyword.
/// Child `j` of a node coded `τ` is coded `τ·2^c + j`, with `j` assigned by
/// descending cluster size and then by the smallest keyword of the cluster.
pub fn build_meaning<I, S>(
    attr: AttrId,
    keywords: I,
    emb: &EmbeddingSet,
    c: u8,
    seed: u64,
) -> Result<SumTree, TreeError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if c == 0 || c > 15 {
        return Err(TreeError::InvalidParameter(format!(
            "meaning trees need 1 <= c <= 15 (got {c})"
        )));
    }
    let mut kws: Vec<String> = keywords.into_iter().map(|k| k.as_ref().to_string()).collect();
    kws.sort_unstable();
    kws.dedup();
    if kws.is_empty() {
        return Err(TreeError::EmptyKeywordSet);
    }
    let mut points = Vec::with_capacity(kws.len());
    for kw in &kws {
        let v = emb
            .get(kw)
            .ok_or_else(|| TreeError::MissingEmbedding(kw.clone()))?;
        points.push(v.to_vec());
    }
    let builder = Builder {
        kws: &kws,
        points: &points,
        fanout: 1usize << c,
        seed,
    };
    let members: Vec<usize> = (0..kws.len()).collect();
    let root = builder.internal(BitCode::root(c), &members)?;
    let mut tree = SumTree::from_proto(
        TreeKind::Meaning,
        attr,
        TreeParams {
            c,
            d: 0,
            extra_levels: 0,
            seed,
            n_char: 0,
        },
        root,
    );
    tree.params.d = tree.depth() as u16;
    Ok(tree)
}

struct Builder<'a> {
    kws: &'a [String],
    points: &'a [Vec<f64>],
    fanout: usize,
    seed: u64,
}

impl Builder<'_> {
    fn leaf(&self, code: BitCode, member: usize) -> ProtoNode {
        let mut node = ProtoNode::new(Code::Bits(code));
        node.keywords.push(self.kws[member].clone());
        node
    }

    /// `members` ascend, so the first member of a cluster is its smallest keyword.
    fn internal(&self, code: BitCode, members: &[usize]) -> Result<ProtoNode, TreeError> {
        let mut node = ProtoNode::new(Code::Bits(code));
        if members.len() <= self.fanout {
            for (j, &m) in members.iter().enumerate() {
                node.children.push(self.leaf(code.child(j as u32)?, m));
            }
            return Ok(node);
        }
        let pts: Vec<Vec<f64>> = members.iter().map(|&m| self.points[m].clone()).collect();
        let node_seed = xxh3_64_with_seed(&code.bits().to_le_bytes(), self.seed);
        let mut clusters: Vec<Vec<usize>> = kmeans(&pts, self.fanout, node_seed)
            .into_iter()
            .map(|cl| cl.into_iter().map(|i| members[i]).collect::<Vec<_>>())
            .collect();
        clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        for (j, cluster) in clusters.iter().enumerate() {
            let child = code.child(j as u32)?;
            node.children.push(if cluster.len() == 1 {
                self.leaf(child, cluster[0])
            } else {
                self.internal(child, cluster)?
            });
        }
        Ok(node)
    }
}
