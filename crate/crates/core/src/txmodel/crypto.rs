use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use sha2::{Digest, Sha256};

use super::{wire, AccountKey, Hash32, Transaction, TxInput};

pub fn sha256d(bytes: &[u8]) -> Hash32 {
    let first = Sha256::digest(bytes);
    Hash32(Sha256::digest(first).into())
}

/// Double SHA-256 of the wire encoding with every signature field zeroed.
pub fn tx_digest(tx: &Transaction) -> Hash32 {
    let mut buf = Vec::with_capacity(wire::serialized_len(tx));
    wire::write_tx(&mut buf, tx, true);
    sha256d(&buf)
}

/// An Ed25519 signing key and the account it controls.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
}

impl Keypair {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        Keypair { signing: SigningKey::from_bytes(&secret) }
    }

    /// Deterministic key for a label, used by the simulator and tests.
    pub fn derive(label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(b"rolechain/key/");
        h.update(label.as_bytes());
        Keypair::from_secret(h.finalize().into())
    }

    pub fn account(&self) -> AccountKey {
        AccountKey(self.signing.verifying_key().to_bytes())
    }

    pub fn secret(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign_digest(&self, digest: &Hash32) -> [u8; 64] {
        self.signing.sign(&digest.0).to_bytes()
    }
}

impl std::fmt::Debug for Keypair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Keypair({})", self.account().short())
    }
}

/// Signs input `index` in place and returns the signed input.
///
/// The input's `signer` must already be the keypair's account, since the
/// digest covers it.
pub fn sign_input(tx: &mut Transaction, index: usize, key: &Keypair) -> TxInput {
    debug_assert_eq!(tx.inputs[index].signer, key.account());
    let digest = tx_digest(tx);
    tx.inputs[index].signature = key.sign_digest(&digest);
    tx.inputs[index]
}

pub fn verify_input(tx: &Transaction, index: usize) -> bool {
    let Some(input) = tx.inputs.get(index) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&input.signer.0) else {
        return false;
    };
    let sig = Signature::from_bytes(&input.signature);
    vk.verify(&tx_digest(tx).0, &sig).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txmodel::{OutPoint, TxMode, TxOutput};

    fn sample(key: &Keypair) -> Transaction {
        let mut tx = Transaction::new(
            TxMode::CoinTransfer,
            vec![TxInput::new(OutPoint::new(Hash32([7; 32]), 1), key.account())],
            vec![TxOutput::new(500, Keypair::derive("bob").account())],
        );
        sign_input(&mut tx, 0, key);
        tx
    }

    #[test]
    fn sign_then_verify() {
        let alice = Keypair::derive("alice");
        let tx = sample(&alice);
        assert!(verify_input(&tx, 0));
        assert!(!verify_input(&tx, 1));
    }

    #[test]
    fn mutation_breaks_signature() {
        let alice = Keypair::derive("alice");
        let mut tx = sample(&alice);
        tx.outputs[0].nvalue += 1;
        assert!(!verify_input(&tx, 0));
    }

    #[test]
    fn wrong_signer_fails() {
        let alice = Keypair::derive("alice");
        let mut tx = sample(&alice);
        tx.inputs[0].signer = Keypair::derive("mallory").account();
        assert!(!verify_input(&tx, 0));
    }

    #[test]
    fn digest_is_deterministic_and_ignores_signatures() {
        let alice = Keypair::derive("alice");
        let tx = sample(&alice);
        assert_eq!(tx_digest(&tx), tx_digest(&tx.clone()));
        let mut unsigned = tx.clone();
        unsigned.inputs[0].signature = [0; 64];
        assert_eq!(tx_digest(&tx), tx_digest(&unsigned));
        let mut flipped = tx.clone();
        flipped.outputs[0].recipient.0[5] ^= 1;
        assert_ne!(tx_digest(&tx), tx_digest(&flipped));
    }

    #[test]
    fn derived_keys_are_stable() {
        assert_eq!(Keypair::derive("x").account(), Keypair::derive("x").account());
        assert_ne!(Keypair::derive("x").account(), Keypair::derive("y").account());
    }
}
