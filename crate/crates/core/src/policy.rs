//! On-chain policy parameters.
//!
//! Every parameter starts at its most permissive default and must be set
//! explicitly before the bootstrap window closes. Entries set closer to the
//! root can only be changed by issuers at the same depth or shallower, and
//! permanent entries never change.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::txmodel::PolicyPayload;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("parameter {0} is permanent")]
    PermanentViolation(PolicyParam),
    #[error("parameter {param} was set at depth {setter_depth}; issuer depth {issuer_depth} is too deep")]
    AuthorityTooDeep { param: PolicyParam, setter_depth: u32, issuer_depth: u32 },
    #[error("interval {value} is below the minimum {minimum}")]
    IntervalBelowMinimum { value: u32, minimum: u32 },
    #[error("unknown policy parameter id {0}")]
    UnknownParam(u8),
    #[error("parameter {0} appears twice in one transaction")]
    DuplicateParam(PolicyParam),
    #[error("value {value} is not valid for {param}")]
    InvalidValue { param: PolicyParam, value: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum PolicyParam {
    /// 0 = independent mining, 1 = dependent mining.
    MiningMode = 0,
    /// Management transactions required per window (x).
    MgmtTxCountX = 1,
    /// Window length in blocks (y).
    MgmtIntervalY = 2,
    MaxMintPerTx = 3,
}

impl PolicyParam {
    pub const ALL: [PolicyParam; 4] = [
        PolicyParam::MiningMode,
        PolicyParam::MgmtTxCountX,
        PolicyParam::MgmtIntervalY,
        PolicyParam::MaxMintPerTx,
    ];

    pub const fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<PolicyParam, PolicyError> {
        PolicyParam::ALL
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or(PolicyError::UnknownParam(id))
    }

    pub const fn name(self) -> &'static str {
        match self {
            PolicyParam::MiningMode => "MINING_MODE",
            PolicyParam::MgmtTxCountX => "MGMT_TX_COUNT_X",
            PolicyParam::MgmtIntervalY => "MGMT_INTERVAL_Y",
            PolicyParam::MaxMintPerTx => "MAX_MINT_PER_TX",
        }
    }

    pub const fn default_value(self) -> u32 {
        match self {
            PolicyParam::MiningMode => MINING_INDEPENDENT,
            PolicyParam::MgmtTxCountX => 0,
            PolicyParam::MgmtIntervalY => u32::MAX,
            PolicyParam::MaxMintPerTx => u32::MAX,
        }
    }
}

impl fmt::Display for PolicyParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyParam {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(p) = PolicyParam::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s)) {
            return Ok(p);
        }
        s.parse::<u8>()
            .map_err(|_| PolicyError::UnknownParam(u8::MAX))
            .and_then(PolicyParam::from_id)
    }
}

pub const MINING_INDEPENDENT: u32 = 0;
pub const MINING_DEPENDENT: u32 = 1;

pub const DEFAULT_Y_MIN: u32 = 16;
pub const DEFAULT_BOOTSTRAP_WINDOW: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyEntry {
    pub value: u32,
    pub permanent: bool,
    pub setter_depth: u32,
    pub set_height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyState {
    entries: BTreeMap<PolicyParam, PolicyEntry>,
    /// Node configuration, not chain state.
    pub y_min: u32,
    pub bootstrap_window: u64,
}

impl Default for PolicyState {
    fn default() -> Self {
        PolicyState::new(DEFAULT_Y_MIN, DEFAULT_BOOTSTRAP_WINDOW)
    }
}

impl PolicyState {
    pub fn new(y_min: u32, bootstrap_window: u64) -> Self {
        PolicyState { entries: BTreeMap::new(), y_min, bootstrap_window }
    }

    pub fn entry(&self, param: PolicyParam) -> Option<&PolicyEntry> {
        self.entries.get(&param)
    }

    pub fn entries(&self) -> impl Iterator<Item = (PolicyParam, &PolicyEntry)> {
        self.entries.iter().map(|(p, e)| (*p, e))
    }

    pub fn effective(&self, param: PolicyParam) -> u32 {
        self.entries.get(&param).map_or(param.default_value(), |e| e.value)
    }

    /// Lookup by raw id, for callers holding wire values.
    pub fn effective_id(&self, id: u8) -> Result<u32, PolicyError> {
        PolicyParam::from_id(id).map(|p| self.effective(p))
    }

    pub fn is_dependent(&self) -> bool {
        self.effective(PolicyParam::MiningMode) == MINING_DEPENDENT
    }

    /// Checks a batch of payloads without changing anything.
    pub fn check_policy_tx(
        &self,
        payloads: &[PolicyPayload],
        issuer_depth: u32,
    ) -> Result<Vec<PolicyParam>, PolicyError> {
        let mut seen = Vec::with_capacity(payloads.len());
        for p in payloads {
            let param = PolicyParam::from_id(p.param_id)?;
            if seen.contains(&param) {
                return Err(PolicyError::DuplicateParam(param));
            }
            seen.push(param);
            if let Some(existing) = self.entries.get(&param) {
                if existing.permanent {
                    return Err(PolicyError::PermanentViolation(param));
                }
                if issuer_depth > existing.setter_depth {
                    return Err(PolicyError::AuthorityTooDeep {
                        param,
                        setter_depth: existing.setter_depth,
                        issuer_depth,
                    });
                }
            }
            match param {
                PolicyParam::MiningMode if p.value > MINING_DEPENDENT => {
                    return Err(PolicyError::InvalidValue { param, value: p.value });
                }
                PolicyParam::MgmtIntervalY if p.value < self.y_min => {
                    return Err(PolicyError::IntervalBelowMinimum { value: p.value, minimum: self.y_min });
                }
                _ => {}
            }
        }
        Ok(seen)
    }

    /// Applies a policy transaction's payloads atomically: either all of them
    /// take effect or the state is unchanged.
    pub fn apply_policy_tx(
        &self,
        payloads: &[PolicyPayload],
        issuer_depth: u32,
        height: u64,
    ) -> Result<PolicyState, PolicyError> {
        let mut next = self.clone();
        next.apply_in_place(payloads, issuer_depth, height)?;
        Ok(next)
    }

    pub(crate) fn apply_in_place(
        &mut self,
        payloads: &[PolicyPayload],
        issuer_depth: u32,
        height: u64,
    ) -> Result<(), PolicyError> {
        let params = self.check_policy_tx(payloads, issuer_depth)?;
        for (param, p) in params.into_iter().zip(payloads) {
            self.entries.insert(
                param,
                PolicyEntry { value: p.value, permanent: p.permanent, setter_depth: issuer_depth, set_height: height },
            );
        }
        Ok(())
    }

    /// Parameters still unset at `height`, once the bootstrap window has closed.
    pub fn bootstrap_check(&self, height: u64) -> Result<(), Vec<PolicyParam>> {
        if height < self.bootstrap_window {
            return Ok(());
        }
        let unset: Vec<_> = PolicyParam::ALL
            .into_iter()
            .filter(|p| !self.entries.contains_key(p))
            .collect();
        if unset.is_empty() {
            Ok(())
        } else {
            Err(unset)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn payload(param: PolicyParam, value: u32, permanent: bool) -> PolicyPayload {
        PolicyPayload { param_id: param.id(), permanent, value }
    }

    #[test]
    fn defaults_are_permissive() {
        let s = PolicyState::default();
        assert_eq!(s.effective(PolicyParam::MgmtTxCountX), 0);
        assert_eq!(s.effective(PolicyParam::MiningMode), MINING_INDEPENDENT);
        assert_eq!(s.effective(PolicyParam::MgmtIntervalY), u32::MAX);
        assert_eq!(s.effective(PolicyParam::MaxMintPerTx), u32::MAX);
        assert_eq!(s.effective_id(9), Err(PolicyError::UnknownParam(9)));
    }

    #[test]
    fn set_then_read() {
        let s = PolicyState::default()
            .apply_policy_tx(&[payload(PolicyParam::MaxMintPerTx, 1000, false)], 1, 3)
            .unwrap();
        assert_eq!(s.effective(PolicyParam::MaxMintPerTx), 1000);
        let e = s.entry(PolicyParam::MaxMintPerTx).unwrap();
        assert_eq!((e.setter_depth, e.set_height), (1, 3));
    }

    #[test]
    fn interval_floor() {
        let s = PolicyState::default();
        let err = s
            .apply_policy_tx(&[payload(PolicyParam::MgmtIntervalY, DEFAULT_Y_MIN - 1, false)], 1, 1)
            .unwrap_err();
        assert_eq!(err, PolicyError::IntervalBelowMinimum { value: 15, minimum: 16 });
        assert!(s.apply_policy_tx(&[payload(PolicyParam::MgmtIntervalY, 16, false)], 1, 1).is_ok());
    }

    #[test]
    fn deeper_issuer_cannot_override() {
        let s = PolicyState::default()
            .apply_policy_tx(&[payload(PolicyParam::MgmtTxCountX, 2, false)], 1, 1)
            .unwrap();
        let err = s.apply_policy_tx(&[payload(PolicyParam::MgmtTxCountX, 3, false)], 2, 2).unwrap_err();
        assert!(matches!(err, PolicyError::AuthorityTooDeep { setter_depth: 1, issuer_depth: 2, .. }));
        // equal depth may overwrite
        let s2 = s.apply_policy_tx(&[payload(PolicyParam::MgmtTxCountX, 3, false)], 1, 2).unwrap();
        assert_eq!(s2.effective(PolicyParam::MgmtTxCountX), 3);
        // rejected update leaves the prior value
        assert_eq!(s.effective(PolicyParam::MgmtTxCountX), 2);
    }

    #[test]
    fn permanent_is_absolute() {
        let s = PolicyState::default()
            .apply_policy_tx(&[payload(PolicyParam::MiningMode, 1, true)], 0, 1)
            .unwrap();
        let err = s.apply_policy_tx(&[payload(PolicyParam::MiningMode, 0, false)], 0, 2).unwrap_err();
        assert_eq!(err, PolicyError::PermanentViolation(PolicyParam::MiningMode));
    }

    #[test]
    fn duplicates_and_unknown_ids_rejected() {
        let s = PolicyState::default();
        let dup = [payload(PolicyParam::MaxMintPerTx, 1, false), payload(PolicyParam::MaxMintPerTx, 2, false)];
        assert_eq!(s.apply_policy_tx(&dup, 0, 1).unwrap_err(), PolicyError::DuplicateParam(PolicyParam::MaxMintPerTx));
        let unknown = [PolicyPayload { param_id: 7, permanent: false, value: 0 }];
        assert_eq!(s.apply_policy_tx(&unknown, 0, 1).unwrap_err(), PolicyError::UnknownParam(7));
        let bad_mode = [payload(PolicyParam::MiningMode, 2, false)];
        assert!(matches!(s.apply_policy_tx(&bad_mode, 0, 1), Err(PolicyError::InvalidValue { .. })));
    }

    #[test]
    fn batch_is_atomic() {
        let s = PolicyState::default();
        let batch = [payload(PolicyParam::MaxMintPerTx, 5, false), payload(PolicyParam::MgmtIntervalY, 1, false)];
        assert!(s.apply_policy_tx(&batch, 0, 1).is_err());
        let mut t = s.clone();
        assert!(t.apply_in_place(&batch, 0, 1).is_err());
        assert_eq!(t, s);
    }

    #[test]
    fn bootstrap_window() {
        let w = DEFAULT_BOOTSTRAP_WINDOW;
        let mut s = PolicyState::default();
        assert_eq!(s.bootstrap_check(w - 1), Ok(()));
        assert_eq!(s.bootstrap_check(w).unwrap_err().len(), 4);
        let three = [
            payload(PolicyParam::MiningMode, 0, false),
            payload(PolicyParam::MgmtTxCountX, 0, false),
            payload(PolicyParam::MgmtIntervalY, 16, false),
        ];
        s = s.apply_policy_tx(&three, 1, 2).unwrap();
        assert_eq!(s.bootstrap_check(w), Err(vec![PolicyParam::MaxMintPerTx]));
        s = s.apply_policy_tx(&[payload(PolicyParam::MaxMintPerTx, 100, false)], 1, w - 1).unwrap();
        assert_eq!(s.bootstrap_check(w), Ok(()));
    }

    #[test]
    fn names_parse() {
        assert_eq!("MGMT_INTERVAL_Y".parse::<PolicyParam>().unwrap(), PolicyParam::MgmtIntervalY);
        assert_eq!("3".parse::<PolicyParam>().unwrap(), PolicyParam::MaxMintPerTx);
        assert!("NOPE".parse::<PolicyParam>().is_err());
    }

    fn arb_payload() -> impl Strategy<Value = PolicyPayload> {
        (0u8..5, any::<bool>(), prop_oneof![0u32..4, 10u32..40, Just(u32::MAX)])
            .prop_map(|(param_id, permanent, value)| PolicyPayload { param_id, permanent, value })
    }

    proptest! {
        /// Permanent values are fixed points; setter depths never increase;
        /// a set y is never below the floor.
        #[test]
        fn lattice_invariants(ops in prop::collection::vec((prop::collection::vec(arb_payload(), 1..3), 0u32..4), 1..30)) {
            let mut s = PolicyState::default();
            for (h, (payloads, depth)) in ops.into_iter().enumerate() {
                let before = s.clone();
                match s.apply_policy_tx(&payloads, depth, h as u64) {
                    Ok(next) => {
                        for p in PolicyParam::ALL {
                            if let Some(old) = before.entry(p) {
                                let new = next.entry(p).unwrap();
                                if old.permanent {
                                    prop_assert_eq!(old, new);
                                }
                                prop_assert!(new.setter_depth <= old.setter_depth);
                            }
                        }
                        if next.entry(PolicyParam::MgmtIntervalY).is_some() {
                            prop_assert!(next.effective(PolicyParam::MgmtIntervalY) >= next.y_min);
                        }
                        s = next;
                    }
                    Err(_) => prop_assert_eq!(&s, &before),
                }
            }
        }
    }
}
