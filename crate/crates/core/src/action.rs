//! Invertible agent actions and probe sequences.
//!
//! Every [`Action`] has exactly one inverse. A probe is `N` repetitions of a
//! single action followed by `N` repetitions of its inverse, which brings a
//! perfect world model back to its starting observation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Heading change of one turn, in degrees.
pub const TURN_QUANTUM_DEGREES: u32 = 15;
/// Number of discrete headings (`360 / TURN_QUANTUM_DEGREES`).
pub const HEADINGS: u8 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("probe half-length must be at least 1")]
    ZeroLengthProbe,
    #[error("Noop cannot be used as a probe action")]
    NoopProbe,
    #[error("unknown action code {0:?} (expected one of L, R, F, B, N)")]
    UnknownCode(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    TurnLeft,
    TurnRight,
    Forward,
    Backward,
    Noop,
}

impl Action {
    /// All actions, in embedding-table order.
    pub const ALL: [Action; 5] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Backward,
        Action::Noop,
    ];

    /// The actions that move the agent (everything except `Noop`).
    pub const MOVING: [Action; 4] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Backward,
    ];

    pub fn inverse(self) -> Action {
        match self {
            Action::TurnLeft => Action::TurnRight,
            Action::TurnRight => Action::TurnLeft,
            Action::Forward => Action::Backward,
            Action::Backward => Action::Forward,
            Action::Noop => Action::Noop,
        }
    }

    /// Row of this action in embedding tables.
    pub fn index(self) -> usize {
        match self {
            Action::TurnLeft => 0,
            Action::TurnRight => 1,
            Action::Forward => 2,
            Action::Backward => 3,
            Action::Noop => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> char {
        match self {
            Action::TurnLeft => 'L',
            Action::TurnRight => 'R',
            Action::Forward => 'F',
            Action::Backward => 'B',
            Action::Noop => 'N',
        }
    }

    pub fn from_code(c: char) -> Result<Action, ActionError> {
        match c {
            'L' => Ok(Action::TurnLeft),
            'R' => Ok(Action::TurnRight),
            'F' => Ok(Action::Forward),
            'B' => Ok(Action::Backward),
            'N' => Ok(Action::Noop),
            other => Err(ActionError::UnknownCode(other)),
        }
    }
}

/// Free-function form of [`Action::inverse`].
pub fn invert(a: Action) -> Action {
    a.inverse()
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for Action {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Action::from_code(c),
            (Some(c), Some(_)) => Err(ActionError::UnknownCode(c)),
            (None, _) => Err(ActionError::UnknownCode(' ')),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut buf = [0u8; 4];
        s.serialize_str(self.code().encode_utf8(&mut buf))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered list of actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ActionSequence(Vec<Action>);

impl ActionSequence {
    pub fn new(actions: Vec<Action>) -> Self {
        Self(actions)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Action] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Action> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Action> {
        self.0
    }

    /// `[a_N^-1, ..., a_1^-1]`: the sequence that undoes `self`.
    pub fn inverted(&self) -> ActionSequence {
        ActionSequence(self.0.iter().rev().map(|a| a.inverse()).collect())
    }

    /// `n` copies of `action` followed by `n` copies of its inverse.
    pub fn probe(action: Action, n: usize) -> Result<ActionSequence, ActionError> {
        if n == 0 {
            return Err(ActionError::ZeroLengthProbe);
        }
        if action == Action::Noop {
            return Err(ActionError::NoopProbe);
        }
        let mut actions = vec![action; n];
        actions.extend(std::iter::repeat_n(action.inverse(), n));
        Ok(ActionSequence(actions))
    }
}

/// Free-function form of [`ActionSequence::inverted`].
pub fn invert_sequence(seq: &ActionSequence) -> ActionSequence {
    seq.inverted()
}

/// Free-function form of [`ActionSequence::probe`].
pub fn build_probe(action: Action, n: usize) -> Result<ActionSequence, ActionError> {
    ActionSequence::probe(action, n)
}

impl From<Vec<Action>> for ActionSequence {
    fn from(v: Vec<Action>) -> Self {
        Self(v)
    }
}

impl FromIterator<Action> for ActionSequence {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ActionSequence {
    type Item = &'a Action;
    type IntoIter = std::slice::Iter<'a, Action>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.code())?;
        }
        Ok(())
    }
}

impl FromStr for ActionSequence {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(Action::from_code)
            .collect()
    }
}

impl Serialize for ActionSequence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ActionSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Action::*;

    #[test]
    fn inverse_pairs() {
        assert_eq!(invert(TurnLeft), TurnRight);
        assert_eq!(invert(Noop), Noop);
        assert_eq!(invert(Forward), Backward);
    }

    #[test]
    fn sequence_inversion_examples() {
        let seq = ActionSequence::new(vec![TurnLeft, TurnLeft, Forward]);
        assert_eq!(
            invert_sequence(&seq).as_slice(),
            &[Backward, TurnRight, TurnRight]
        );
        assert!(invert_sequence(&ActionSequence::empty()).is_empty());
        assert_eq!(
            invert_sequence(&ActionSequence::new(vec![Forward])).as_slice(),
            &[Backward]
        );
    }

    #[test]
    fn probe_examples() {
        assert_eq!(
            build_probe(TurnLeft, 2).unwrap().as_slice(),
            &[TurnLeft, TurnLeft, TurnRight, TurnRight]
        );
        assert_eq!(
            build_probe(Forward, 1).unwrap().as_slice(),
            &[Forward, Backward]
        );
        let p = build_probe(TurnLeft, 16).unwrap();
        assert_eq!(p.len(), 32);
        assert!(p.as_slice()[..16].iter().all(|&a| a == TurnLeft));
        assert!(p.as_slice()[16..].iter().all(|&a| a == TurnRight));
    }

    #[test]
    fn probe_errors() {
        assert_eq!(build_probe(TurnLeft, 0), Err(ActionError::ZeroLengthProbe));
        assert_eq!(build_probe(Noop, 3), Err(ActionError::NoopProbe));
    }

    #[test]
    fn codes_parse() {
        let seq: ActionSequence = "LRFBN".parse().unwrap();
        assert_eq!(seq.as_slice(), &Action::ALL);
        assert_eq!(seq.to_string(), "LRFBN");
        assert!("LX".parse::<ActionSequence>().is_err());
        let json = serde_json::to_string(&TurnRight).unwrap();
        assert_eq!(json, "\"R\"");
    }

    fn any_action() -> impl Strategy<Value = Action> {
        (0usize..5).prop_map(|i| Action::from_index(i).unwrap())
    }

    proptest! {
        #[test]
        fn inverse_is_involution(a in any_action()) {
            prop_assert_eq!(a.inverse().inverse(), a);
        }

        #[test]
        fn sequence_inversion_is_involution(v in proptest::collection::vec(any_action(), 0..40)) {
            let seq = ActionSequence::new(v);
            prop_assert_eq!(seq.inverted().len(), seq.len());
            prop_assert_eq!(seq.inverted().inverted(), seq);
        }

        #[test]
        fn probe_second_half_undoes_first(i in 0usize..4, n in 1usize..50) {
            let a = Action::MOVING[i];
            let p = build_probe(a, n).unwrap();
            prop_assert_eq!(p.len(), 2 * n);
            let first = ActionSequence::new(p.as_slice()[..n].to_vec());
            let inv = first.inverted();
            prop_assert_eq!(&p.as_slice()[n..], inv.as_slice());
        }
    }
}
