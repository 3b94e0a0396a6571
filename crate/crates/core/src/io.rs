//! JSON instance files.
//!
//! ```json
//! {"balls":[{"center":[0.0,0.0],"radius":1.0}],"dim":2,"kind":"ccb"}
//! {"a0":[0.0],"constraints":[{"a":[0.5],"b":0.0}],"dim":1,"kind":"uq"}
//! ```
//!
//! Output is canonical: keys sorted, floats in shortest round-trip form, so writing a parsed
//! file reproduces it byte for byte.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Ball, CcbInstance, UqConstraint, UqInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallRecord {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRecord {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceFile {
    Ccb {
        dim: usize,
        balls: Vec<BallRecord>,
    },
    Uq {
        dim: usize,
        a0: Vec<f64>,
        constraints: Vec<ConstraintRecord>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Ccb(CcbInstance),
    Uq(UqInstance),
}

fn check_len(dim: usize, v: &[f64]) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(())
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        match self {
            InstanceFile::Ccb { dim, balls } => {
                let balls = balls
                    .into_iter()
                    .map(|b| {
                        check_len(dim, &b.center)?;
                        Ball::new(DVector::from_vec(b.center), b.radius)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Instance::Ccb(CcbInstance::new(balls)?))
            }
            InstanceFile::Uq { dim, a0, constraints } => {
                check_len(dim, &a0)?;
                let constraints = constraints
                    .into_iter()
                    .map(|c| {
                        check_len(dim, &c.a)?;
                        Ok(UqConstraint {
                            a: DVector::from_vec(c.a),
                            b: c.b,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Instance::Uq(UqInstance::new(DVector::from_vec(a0), constraints)?))
            }
        }
    }
}

impl From<&CcbInstance> for InstanceFile {
    fn from(inst: &CcbInstance) -> Self {
        InstanceFile::Ccb {
            dim: inst.dim(),
            balls: inst
                .balls()
                .iter()
                .map(|b| BallRecord {
                    center: b.center.iter().copied().collect(),
                    radius: b.radius,
                })
                .collect(),
        }
    }
}

impl From<&UqInstance> for InstanceFile {
    fn from(uq: &UqInstance) -> Self {
        InstanceFile::Uq {
            dim: uq.dim(),
            a0: uq.a0().iter().copied().collect(),
            constraints: uq
                .constraints()
                .iter()
                .map(|c| ConstraintRecord {
                    a: c.a.iter().copied().collect(),
                    b: c.b,
                })
                .collect(),
        }
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        match inst {
            Instance::Ccb(c) => c.into(),
            Instance::Uq(u) => u.into(),
        }
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_instance()
}

/// Serializes any value with sorted keys and shortest round-trip floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("instance data serializes");
    serde_json::to_string(&v).expect("JSON values serialize")
}

pub fn instance_to_json(inst: &Instance) -> String {
    to_canonical_json(&InstanceFile::from(inst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = r#"{"balls":[{"center":[0.1,-2.5],"radius":1.0000000000000002}],"dim":2,"kind":"ccb"}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(instance_to_json(&inst), text);
        let text = r#"{"a0":[0.0],"constraints":[{"a":[-0.5],"b":-4.0},{"a":[0.5],"b":0.0}],"dim":1,"kind":"uq"}"#;
        assert_eq!(instance_to_json(&parse_instance(text).unwrap()), text);
    }

    #[test]
    fn unordered_keys_are_canonicalized() {
        let text = r#"{"kind":"ccb","dim":1,"balls":[{"radius":2,"center":[1]}]}"#;
        let out = instance_to_json(&parse_instance(text).unwrap());
        assert_eq!(out, r#"{"balls":[{"center":[1.0],"radius":2.0}],"dim":1,"kind":"ccb"}"#);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_instance("{\"kind\":\"ccb\",\n\"dim\": 2,\n\"balls\": [}").unwrap_err();
        let Error::Parse { line, .. } = err else { panic!("{err}") };
        assert_eq!(line, 3);
        assert!(matches!(
            parse_instance(r#"{"kind":"ccb","dim":2,"balls":[{"center":[1],"radius":1}]}"#),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(parse_instance(r#"{"kind":"ccb","dim":1,"balls":[{"center":[1],"radius":-1}]}"#).is_err());
        assert!(parse_instance(r#"{"kind":"box","dim":1}"#).is_err());
    }
}
