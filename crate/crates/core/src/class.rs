use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Binary class. `True` is the positive class: a public development project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "TRUE")]
    True,
    #[serde(rename = "FALSE")]
    False,
}

impl Class {
    pub fn is_positive(self) -> bool {
        self == Class::True
    }

    pub fn flip(self) -> Class {
        match self {
            Class::True => Class::False,
            Class::False => Class::True,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::True => "TRUE",
            Class::False => "FALSE",
        }
    }
}

impl From<bool> for Class {
    fn from(b: bool) -> Self {
        if b {
            Class::True
        } else {
            Class::False
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" | "t" | "1" | "yes" => Ok(Class::True),
            "false" | "f" | "0" | "no" => Ok(Class::False),
            _ => Err(Error::input(format!("`{s}` is not a class label"))),
        }
    }
}

/// A reviewer's call on one project. `Undecided` parks the item for a second pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "TRUE")]
    True,
    #[serde(rename = "FALSE")]
    False,
    #[serde(rename = "UNDECIDED")]
    Undecided,
}

impl Decision {
    pub fn class(self) -> Option<Class> {
        match self {
            Decision::True => Some(Class::True),
            Decision::False => Some(Class::False),
            Decision::Undecided => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::True => "TRUE",
            Decision::False => "FALSE",
            Decision::Undecided => "UNDECIDED",
        }
    }
}

impl From<Class> for Decision {
    fn from(c: Class) -> Self {
        match c {
            Class::True => Decision::True,
            Class::False => Decision::False,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "TRUE" => Ok(Decision::True),
            "FALSE" => Ok(Decision::False),
            "UNDECIDED" => Ok(Decision::Undecided),
            other => Err(Error::UnknownDecision(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_parse_accepts_common_spellings() {
        assert_eq!("TRUE".parse::<Class>().unwrap(), Class::True);
        assert_eq!("false".parse::<Class>().unwrap(), Class::False);
        assert_eq!("1".parse::<Class>().unwrap(), Class::True);
        assert!("maybe".parse::<Class>().is_err());
    }

    #[test]
    fn decision_tokens_are_strict() {
        assert_eq!(
            "UNDECIDED".parse::<Decision>().unwrap(),
            Decision::Undecided
        );
        assert!(matches!(
            "true".parse::<Decision>(),
            Err(Error::UnknownDecision(_))
        ));
    }
}
