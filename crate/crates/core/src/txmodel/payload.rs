//! Role and policy payloads carried in the low-order bits of `nvalue`.
//!
//! Role layout: bit 0 = U, bit 1 = A, bit 2 = C, bit 3 = L, bit 4 = M,
//! bit 5 = locked. Policy layout: bits 0..8 = parameter id, bit 8 =
//! permanent, bits 16..48 = value. Any other set bit is malformed.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("malformed payload nvalue {0:#x}")]
    MalformedPayload(u64),
    #[error("invalid role letters {0:?}")]
    InvalidRoleLetters(String),
}

/// One of the five account roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// Registered user: may spend ordinary coin.
    User,
    /// Account manager: may grant or remove U.
    AccountManager,
    /// Central banker: may mint.
    CentralBanker,
    /// Law enforcement: may lock accounts and move funds inside its scope.
    LawEnforcement,
    /// Currency manager: may set any role within its scope and change policy.
    Manager,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::User,
        Role::AccountManager,
        Role::CentralBanker,
        Role::LawEnforcement,
        Role::Manager,
    ];

    /// Display order used in hierarchy labels.
    pub const DISPLAY_ORDER: [Role; 5] = [
        Role::Manager,
        Role::CentralBanker,
        Role::LawEnforcement,
        Role::User,
        Role::AccountManager,
    ];

    pub const fn bit(self) -> u8 {
        match self {
            Role::User => 1 << 0,
            Role::AccountManager => 1 << 1,
            Role::CentralBanker => 1 << 2,
            Role::LawEnforcement => 1 << 3,
            Role::Manager => 1 << 4,
        }
    }

    pub const fn letter(self) -> char {
        match self {
            Role::User => 'U',
            Role::AccountManager => 'A',
            Role::CentralBanker => 'C',
            Role::LawEnforcement => 'L',
            Role::Manager => 'M',
        }
    }

    pub fn from_letter(c: char) -> Option<Role> {
        match c.to_ascii_uppercase() {
            'U' => Some(Role::User),
            'A' => Some(Role::AccountManager),
            'C' => Some(Role::CentralBanker),
            'L' => Some(Role::LawEnforcement),
            'M' => Some(Role::Manager),
            _ => None,
        }
    }
}

/// A set of roles, stored in five bits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RoleSet(u8);

impl RoleSet {
    pub const EMPTY: RoleSet = RoleSet(0);
    pub const ALL: RoleSet = RoleSet(0x1f);
    const MASK: u8 = 0x1f;

    pub const fn from_bits(bits: u8) -> Option<RoleSet> {
        if bits & !Self::MASK != 0 {
            None
        } else {
            Some(RoleSet(bits))
        }
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn contains(self, role: Role) -> bool {
        self.0 & role.bit() != 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[must_use]
    pub const fn with(self, role: Role) -> RoleSet {
        RoleSet(self.0 | role.bit())
    }

    #[must_use]
    pub const fn without(self, role: Role) -> RoleSet {
        RoleSet(self.0 & !role.bit())
    }

    /// Roles present in exactly one of the two sets.
    pub const fn difference(self, other: RoleSet) -> RoleSet {
        RoleSet(self.0 ^ other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Role> {
        Role::DISPLAY_ORDER
            .into_iter()
            .filter(move |r| self.contains(*r))
    }

    pub fn has_u(self) -> bool {
        self.contains(Role::User)
    }
    pub fn has_a(self) -> bool {
        self.contains(Role::AccountManager)
    }
    pub fn has_c(self) -> bool {
        self.contains(Role::CentralBanker)
    }
    pub fn has_l(self) -> bool {
        self.contains(Role::LawEnforcement)
    }
    pub fn has_m(self) -> bool {
        self.contains(Role::Manager)
    }
}

impl FromIterator<Role> for RoleSet {
    fn from_iter<I: IntoIterator<Item = Role>>(iter: I) -> Self {
        iter.into_iter().fold(RoleSet::EMPTY, RoleSet::with)
    }
}

impl fmt::Debug for RoleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RoleSet({self})")
    }
}

/// Letters in M, C, L, U, A order; `-` for the empty set.
impl fmt::Display for RoleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for r in self.iter() {
            write!(f, "{}", r.letter())?;
        }
        Ok(())
    }
}

/// Parses letters in any order. `-`, `none` and the empty string are the empty set.
impl FromStr for RoleSet {
    type Err = PayloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "-" || s.eq_ignore_ascii_case("none") {
            return Ok(RoleSet::EMPTY);
        }
        s.chars()
            .filter(|c| *c != ',' && !c.is_whitespace())
            .map(|c| Role::from_letter(c).ok_or_else(|| PayloadError::InvalidRoleLetters(s.into())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RolePayload {
    pub roles: RoleSet,
    pub locked: bool,
}

const LOCK_BIT: u64 = 1 << 5;

impl RolePayload {
    pub const fn new(roles: RoleSet, locked: bool) -> Self {
        RolePayload { roles, locked }
    }
}

pub fn encode_role_nvalue(payload: RolePayload) -> u64 {
    let mut v = u64::from(payload.roles.bits());
    if payload.locked {
        v |= LOCK_BIT;
    }
    v
}

pub fn decode_role_nvalue(nvalue: u64) -> Result<RolePayload, PayloadError> {
    if nvalue >> 6 != 0 {
        return Err(PayloadError::MalformedPayload(nvalue));
    }
    Ok(RolePayload {
        roles: RoleSet((nvalue & 0x1f) as u8),
        locked: nvalue & LOCK_BIT != 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolicyPayload {
    pub param_id: u8,
    pub permanent: bool,
    pub value: u32,
}

const PERMANENT_BIT: u64 = 1 << 8;
const POLICY_MASK: u64 = 0x0000_ffff_ffff_01ff;

pub fn encode_policy_nvalue(payload: PolicyPayload) -> u64 {
    let mut v = u64::from(payload.param_id) | (u64::from(payload.value) << 16);
    if payload.permanent {
        v |= PERMANENT_BIT;
    }
    v
}

pub fn decode_policy_nvalue(nvalue: u64) -> Result<PolicyPayload, PayloadError> {
    if nvalue & !POLICY_MASK != 0 {
        return Err(PayloadError::MalformedPayload(nvalue));
    }
    Ok(PolicyPayload {
        param_id: (nvalue & 0xff) as u8,
        permanent: nvalue & PERMANENT_BIT != 0,
        value: ((nvalue >> 16) & 0xffff_ffff) as u32,
    })
}
