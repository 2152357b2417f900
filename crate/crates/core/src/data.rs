//! Shipped instances, compiled into the library.

use crate::error::{Error, Result};
use crate::hamiltonian::{Circuit, XZHamiltonian};

const HAMILTONIANS: &[(&str, &str)] = &[
    ("h1", include_str!("../data/hamiltonians/h1.json")),
    ("h2", include_str!("../data/hamiltonians/h2.json")),
    ("h3", include_str!("../data/hamiltonians/h3.json")),
    ("gap_yes", include_str!("../data/hamiltonians/gap_yes.json")),
    ("gap_no", include_str!("../data/hamiltonians/gap_no.json")),
];

const CIRCUITS: &[(&str, &str)] = &[
    ("accept", include_str!("../data/circuits/accept.json")),
    ("reject", include_str!("../data/circuits/reject.json")),
    ("one_gate", include_str!("../data/circuits/one_gate.json")),
    ("two_gate", include_str!("../data/circuits/two_gate.json")),
    ("toffoli", include_str!("../data/circuits/toffoli.json")),
];

pub fn hamiltonian_names() -> impl Iterator<Item = &'static str> {
    HAMILTONIANS.iter().map(|(n, _)| *n)
}

pub fn circuit_names() -> impl Iterator<Item = &'static str> {
    CIRCUITS.iter().map(|(n, _)| *n)
}

pub fn hamiltonian(name: &str) -> Result<XZHamiltonian> {
    let (_, src) = HAMILTONIANS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Parameter(format!("no shipped Hamiltonian named {name}")))?;
    XZHamiltonian::from_json(src)
}

pub fn circuit(name: &str) -> Result<Circuit> {
    let (_, src) = CIRCUITS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Parameter(format!("no shipped circuit named {name}")))?;
    Circuit::from_json(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_parses_and_round_trips() {
        for n in hamiltonian_names() {
            let h = hamiltonian(n).unwrap();
            assert_eq!(XZHamiltonian::from_json(&h.to_json().unwrap()).unwrap(), h);
        }
        for n in circuit_names() {
            let c = circuit(n).unwrap();
            assert_eq!(Circuit::from_json(&serde_json::to_string(&c).unwrap()).unwrap(), c);
        }
        assert!(hamiltonian("nope").is_err());
    }
}
