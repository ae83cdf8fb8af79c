//! Transactions, their three `nvalue` interpretation modes, wire encoding,
//! digests and signatures.

mod crypto;
mod payload;
pub mod wire;

use std::fmt;

pub use crypto::{sha256d, sign_input, tx_digest, verify_input, Keypair};
pub use payload::{
    decode_policy_nvalue, decode_role_nvalue, encode_policy_nvalue, encode_role_nvalue,
    PayloadError, PolicyPayload, Role, RolePayload, RoleSet,
};
pub use wire::{deserialize_tx, serialize_tx, WireError};

/// A 32-byte digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

pub type Txid = Hash32;

/// An account, identified by its 32-byte Ed25519 verification key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AccountKey(pub [u8; 32]);

impl AccountKey {
    pub const NULL: AccountKey = AccountKey([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for AccountKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountKey({})", self.short())
    }
}

impl fmt::Display for AccountKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// How the `nvalue` fields of a transaction are read; selected by version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxMode {
    CoinTransfer,
    RoleChange,
    PolicyChange,
}

impl TxMode {
    pub const fn version(self) -> u32 {
        match self {
            TxMode::CoinTransfer => 2,
            TxMode::RoleChange => 3,
            TxMode::PolicyChange => 4,
        }
    }

    pub const fn from_version(version: u32) -> Option<TxMode> {
        match version {
            2 => Some(TxMode::CoinTransfer),
            3 => Some(TxMode::RoleChange),
            4 => Some(TxMode::PolicyChange),
            _ => None,
        }
    }

    pub const fn is_management(self) -> bool {
        !matches!(self, TxMode::CoinTransfer)
    }
}

impl fmt::Display for TxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxMode::CoinTransfer => "transfer",
            TxMode::RoleChange => "role",
            TxMode::PolicyChange => "policy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutPoint {
    pub txid: Txid,
    pub index: u32,
}

impl OutPoint {
    /// The prevout of coinbase and genesis inputs.
    pub const NULL: OutPoint = OutPoint { txid: Hash32::ZERO, index: u32::MAX };

    pub const fn new(txid: Txid, index: u32) -> Self {
        OutPoint { txid, index }
    }

    pub fn is_null(&self) -> bool {
        *self == Self::NULL
    }
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid.short(), self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TxInput {
    pub prevout: OutPoint,
    pub signature: [u8; 64],
    pub signer: AccountKey,
    /// The signer spends an output it does not own, on the strength of its
    /// role authority rather than ownership.
    pub law_override: bool,
}

impl TxInput {
    /// An unsigned input; fill the signature with [`sign_input`].
    pub fn new(prevout: OutPoint, signer: AccountKey) -> Self {
        TxInput { prevout, signature: [0; 64], signer, law_override: false }
    }

    pub fn overriding(prevout: OutPoint, signer: AccountKey) -> Self {
        TxInput { law_override: true, ..TxInput::new(prevout, signer) }
    }

    fn null(signer: AccountKey) -> Self {
        TxInput::new(OutPoint::NULL, signer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TxOutput {
    pub nvalue: u64,
    pub recipient: AccountKey,
}

impl TxOutput {
    pub const fn new(nvalue: u64, recipient: AccountKey) -> Self {
        TxOutput { nvalue, recipient }
    }

    pub fn role(payload: RolePayload, recipient: AccountKey) -> Self {
        TxOutput::new(encode_role_nvalue(payload), recipient)
    }

    pub fn policy(payload: PolicyPayload, recipient: AccountKey) -> Self {
        TxOutput::new(encode_policy_nvalue(payload), recipient)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub version: u32,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    /// Carried on the wire; coinbase transactions commit the block height here.
    pub locktime: u32,
}

impl Transaction {
    pub fn new(mode: TxMode, inputs: Vec<TxInput>, outputs: Vec<TxOutput>) -> Self {
        Transaction { version: mode.version(), inputs, outputs, locktime: 0 }
    }

    /// Block reward transaction. The height in `locktime` keeps coinbase txids unique.
    pub fn coinbase(height: u64, outputs: Vec<TxOutput>) -> Self {
        Transaction {
            version: TxMode::CoinTransfer.version(),
            inputs: vec![TxInput::null(AccountKey::NULL)],
            outputs,
            locktime: height as u32,
        }
    }

    /// The block-0 role grant endowing `root` with every role.
    pub fn genesis(root: AccountKey) -> Self {
        Transaction {
            version: TxMode::RoleChange.version(),
            inputs: vec![TxInput::null(root)],
            outputs: vec![
                TxOutput::new(0, root),
                TxOutput::role(RolePayload::new(RoleSet::ALL, false), root),
            ],
            locktime: 0,
        }
    }

    pub fn mode(&self) -> Option<TxMode> {
        TxMode::from_version(self.version)
    }

    fn has_single_null_input(&self) -> bool {
        self.inputs.len() == 1
            && self.inputs[0].prevout.is_null()
            && self.inputs[0].signature == [0; 64]
    }

    pub fn is_coinbase(&self) -> bool {
        self.mode() == Some(TxMode::CoinTransfer) && self.has_single_null_input()
    }

    pub fn is_genesis(&self) -> bool {
        self.mode() == Some(TxMode::RoleChange) && self.has_single_null_input()
    }

    pub fn is_management(&self) -> bool {
        self.mode().is_some_and(TxMode::is_management)
    }

    pub fn txid(&self) -> Txid {
        tx_digest(self)
    }

    pub fn outpoint(&self, index: u32) -> OutPoint {
        OutPoint::new(self.txid(), index)
    }
}
