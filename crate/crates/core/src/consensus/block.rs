use crate::txmodel::wire::{self, Reader, WireError};
use crate::txmodel::{sha256d, Hash32, Transaction, Txid};

/// A 256-bit proof-of-work threshold, compared big-endian against header hashes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target(pub [u8; 32]);

impl Target {
    /// Roughly one hash in sixteen succeeds.
    pub const EASY: Target = {
        let mut t = [0xff; 32];
        t[0] = 0x0f;
        Target(t)
    };

    pub fn is_met_by(&self, hash: &Hash32) -> bool {
        hash.0 <= self.0
    }
}

pub const HEADER_LEN: usize = 32 + 32 + 8 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub prev_hash: Hash32,
    pub merkle_root: Hash32,
    pub height: u64,
    pub nonce: u64,
    pub target: Target,
}

impl BlockHeader {
    pub fn write(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&self.prev_hash.0);
        buf.extend_from_slice(&self.merkle_root.0);
        buf.extend_from_slice(&self.height.to_le_bytes());
        buf.extend_from_slice(&self.nonce.to_le_bytes());
        buf.extend_from_slice(&self.target.0);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<BlockHeader, WireError> {
        Ok(BlockHeader {
            prev_hash: Hash32(r.array()?),
            merkle_root: Hash32(r.array()?),
            height: r.u64()?,
            nonce: r.u64()?,
            target: Target(r.array()?),
        })
    }

    pub fn hash(&self) -> Hash32 {
        let mut buf = Vec::with_capacity(HEADER_LEN);
        self.write(&mut buf);
        sha256d(&buf)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    /// `transactions[0]` is the coinbase (or the genesis grant in block 0).
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn txids(&self) -> Vec<Txid> {
        self.transactions.iter().map(Transaction::txid).collect()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf);
        buf
    }

    pub fn write(&self, buf: &mut Vec<u8>) {
        self.header.write(buf);
        wire::write_compact_size(buf, self.transactions.len() as u64);
        for tx in &self.transactions {
            buf.extend_from_slice(&wire::serialize_tx(tx));
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Block, WireError> {
        let header = BlockHeader::read(r)?;
        let n = r.count(wire::OUTPUT_LEN + 10)?;
        let transactions = (0..n).map(|_| wire::read_tx(r)).collect::<Result<_, _>>()?;
        Ok(Block { header, transactions })
    }
}

/// Bitcoin-style merkle root: pairwise double SHA-256, duplicating the last
/// element of odd levels.
pub fn merkle_root(txids: &[Txid]) -> Hash32 {
    if txids.is_empty() {
        return Hash32::ZERO;
    }
    let mut level: Vec<Hash32> = txids.to_vec();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(&pair[0].0);
                buf[32..].copy_from_slice(&right.0);
                sha256d(&buf)
            })
            .collect();
    }
    level[0]
}

/// Concatenated block encodings, as stored in chain files.
pub fn serialize_chain<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> Vec<u8> {
    let mut buf = Vec::new();
    for b in blocks {
        b.write(&mut buf);
    }
    buf
}

pub fn deserialize_chain(bytes: &[u8]) -> Result<Vec<Block>, WireError> {
    let mut r = Reader::new(bytes);
    let mut blocks = Vec::new();
    while !r.is_empty() {
        blocks.push(Block::read(&mut r)?);
    }
    Ok(blocks)
}
