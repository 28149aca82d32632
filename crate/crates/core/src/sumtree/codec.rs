use super::{BitCode, CharCode, Code, SumTree, SumTreeNode, TreeError, TreeKind, TreeParams};

pub const TREE_MAGIC: &[u8; 4] = b"STRE";
pub const TREE_FORMAT_VERSION: u8 = 1;

/// Binary tree file: header, then one record per node in preorder.
///
/// Header: magic, version u8, kind u8, c u8, d u16, keyword count u32,
/// extra_levels u8, seed u64, n_char u16, attr u16, node count u32.
/// Record: code, child count u32, ns u16, keyword count u16, keywords.
/// Bit codes are a length byte and 16 payload bytes; char codes and keywords
/// are a u16 byte length and UTF-8. All integers are little endian.
pub fn serialize_tree(tree: &SumTree) -> Vec<u8> {
    let mut out = Vec::new();
    let p = tree.params();
    out.extend_from_slice(TREE_MAGIC);
    out.push(TREE_FORMAT_VERSION);
    out.push(tree.kind().as_u8());
    out.push(p.c);
    out.extend_from_slice(&p.d.to_le_bytes());
    out.extend_from_slice(&(tree.keyword_count() as u32).to_le_bytes());
    out.push(p.extra_levels);
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.extend_from_slice(&p.n_char.to_le_bytes());
    out.extend_from_slice(&tree.attr().to_le_bytes());
    out.extend_from_slice(&(tree.node_count() as u32).to_le_bytes());
    for node in tree.nodes() {
        match &node.code {
            Code::Bits(b) => {
                out.push(b.len() as u8);
                out.extend_from_slice(&b.bits().to_le_bytes());
            }
            Code::Chars(s) => put_str(&mut out, s.as_str()),
        }
        out.extend_from_slice(&(node.children.len() as u32).to_le_bytes());
        out.extend_from_slice(&node.ns.to_le_bytes());
        out.extend_from_slice(&(node.keywords.len() as u16).to_le_bytes());
        for kw in &node.keywords {
            put_str(&mut out, kw);
        }
    }
    out
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn malformed(msg: impl Into<String>) -> TreeError {
    TreeError::MalformedTreeFile(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TreeError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| malformed(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], TreeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, TreeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, TreeError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, TreeError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn str(&mut self) -> Result<String, TreeError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("invalid UTF-8"))
    }
}

pub fn deserialize_tree(bytes: &[u8]) -> Result<SumTree, TreeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != TREE_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = r.u8()?;
    if version != TREE_FORMAT_VERSION {
        return Err(malformed(format!(
            "version {version}, expected {TREE_FORMAT_VERSION}"
        )));
    }
    let kind = TreeKind::from_u8(r.u8()?).ok_or_else(|| malformed("unknown tree kind"))?;
    let c = r.u8()?;
    let d = r.u16()?;
    let keyword_count = r.u32()? as usize;
    let extra_levels = r.u8()?;
    let seed = u64::from_le_bytes(r.array()?);
    let n_char = r.u16()?;
    let attr = r.u16()?;
    let node_count = r.u32()? as usize;
    if node_count == 0 {
        return Err(malformed("tree has no root"));
    }

    let mut nodes: Vec<SumTreeNode> = Vec::with_capacity(node_count.min(1 << 20));
    // (node index, children still to read)
    let mut stack: Vec<(u32, u32)> = Vec::new();
    for i in 0..node_count {
        let code = match kind {
            TreeKind::Alph => Code::Chars(CharCode::parse(&r.str()?).map_err(|e| malformed(e.to_string()))?),
            TreeKind::Hash | TreeKind::Meaning => {
                let len = r.u8()? as u32;
                let bits = u128::from_le_bytes(r.array()?);
                Code::Bits(BitCode::new(bits, len, c).map_err(|e| malformed(e.to_string()))?)
            }
        };
        let nc = r.u32()?;
        let ns = r.u16()?;
        let nk = r.u16()?;
        let keywords = (0..nk).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let parent = match stack.last_mut() {
            Some((p, remaining)) => {
                let p = *p;
                *remaining -= 1;
                Some(p)
            }
            None if i == 0 => None,
            None => return Err(malformed("more nodes than the preorder shape allows")),
        };
        while matches!(stack.last(), Some((_, 0))) {
            stack.pop();
        }
        let idx = i as u32;
        if let Some(p) = parent {
            nodes[p as usize].children.push(idx);
        }
        nodes.push(SumTreeNode {
            code,
            parent,
            children: Vec::with_capacity(nc as usize),
            ns,
            keywords,
        });
        if nc > 0 {
            stack.push((idx, nc));
        }
    }
    if !stack.is_empty() {
        return Err(malformed("node records end before all children were read"));
    }
    if r.pos != bytes.len() {
        return Err(malformed("trailing bytes"));
    }
    let params = TreeParams {
        c,
        d,
        extra_levels,
        seed,
        n_char,
    };
    let tree = SumTree::from_nodes(kind, attr, params, nodes);
    if tree.keyword_count() != keyword_count {
        return Err(malformed(format!(
            "header declares {keyword_count} keywords, records hold {}",
            tree.keyword_count()
        )));
    }
    Ok(tree)
}
