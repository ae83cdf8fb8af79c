//! A managed proof-of-work cryptocurrency: role-carrying UTXOs, an account
//! hierarchy with scoped authority, on-chain policy and dependent mining.

pub mod cli;
pub mod consensus;
pub mod hierarchy;
pub mod ledger;
pub mod policy;
pub mod simnet;
pub mod txmodel;
pub mod wallet;
