//! On-disk JSON formats. Complex numbers are `[re, im]` pairs; matrices are lists of rows;
//! every register list is big-endian (the first register is the most significant digit).

use std::fs;
use std::path::Path;

use qicost::classical::ClassicalProtocol;
use qicost::linalg::{ComplexMatrix, C64};
use qicost::protocol::{validate_protocol, Entanglement, Isometry, Party, QuantumProtocol, Round};
use qicost::registers::{RegisterLabel, RegisterSystem};
use qicost::reversible::{Circuit, Gate, ReversibleProtocol};
use qicost::state::{InputDistribution, PureState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn complex(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementFile {
    pub alice: Vec<RegisterLabel>,
    pub bob: Vec<RegisterLabel>,
    /// Dense amplitudes over Alice's registers followed by Bob's.
    pub amplitudes: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundFile {
    pub owner: Party,
    pub inputs: Vec<RegisterLabel>,
    pub outputs: Vec<RegisterLabel>,
    /// Rows indexed by output value, columns by input value.
    pub matrix: Vec<Vec<Pair>>,
    #[serde(default)]
    pub message: Option<String>,
    #[serde(default)]
    pub controls: Vec<String>,
    #[serde(default)]
    pub adjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub x_dim: usize,
    pub y_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entanglement: Option<EntanglementFile>,
    pub rounds: Vec<RoundFile>,
    #[serde(default)]
    pub alice_output: Vec<String>,
    #[serde(default)]
    pub bob_output: Vec<String>,
    #[serde(default)]
    pub custom_order: bool,
}

impl ProtocolFile {
    pub fn from_protocol(p: &QuantumProtocol) -> Result<Self, CliError> {
        let entanglement = if p.entanglement.alice.is_empty() && p.entanglement.bob.is_empty() {
            None
        } else {
            Some(EntanglementFile {
                alice: p.entanglement.alice.clone(),
                bob: p.entanglement.bob.clone(),
                amplitudes: p.entanglement.state.amplitudes()?.into_iter().map(pair).collect(),
            })
        };
        let rounds = p
            .rounds
            .iter()
            .map(|r| {
                let m = &r.isometry.matrix;
                RoundFile {
                    owner: r.owner,
                    inputs: r.isometry.inputs.clone(),
                    outputs: r.isometry.outputs.clone(),
                    matrix: (0..m.rows())
                        .map(|i| (0..m.cols()).map(|j| pair(m.get(i, j))).collect())
                        .collect(),
                    message: r.message.clone(),
                    controls: r.controls.clone(),
                    adjoint: r.adjoint,
                }
            })
            .collect();
        Ok(Self {
            x_dim: p.x_dim,
            y_dim: p.y_dim,
            entanglement,
            rounds,
            alice_output: p.alice_output.clone(),
            bob_output: p.bob_output.clone(),
            custom_order: p.custom_order,
        })
    }

    /// Builds the protocol and checks it against the protocol rules.
    pub fn to_protocol(&self) -> Result<QuantumProtocol, CliError> {
        let entanglement = match &self.entanglement {
            None => Entanglement::none(),
            Some(e) => {
                let labels: Vec<RegisterLabel> = e.alice.iter().chain(&e.bob).cloned().collect();
                let amps: Vec<C64> = e.amplitudes.iter().map(complex).collect();
                let state = PureState::from_dense(RegisterSystem::new(labels)?, &amps)?;
                Entanglement::new(e.alice.clone(), e.bob.clone(), state)?
            }
        };
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for (k, r) in self.rounds.iter().enumerate() {
            let cols = r.matrix.first().map_or(0, Vec::len);
            if r.matrix.iter().any(|row| row.len() != cols) {
                return Err(CliError::Input(format!(
                    "round {}: matrix rows have different lengths",
                    k + 1
                )));
            }
            let data = r.matrix.iter().flatten().map(complex).collect();
            let matrix = ComplexMatrix::new(r.matrix.len(), cols, data)?;
            rounds.push(Round {
                owner: r.owner,
                isometry: Isometry::new(r.inputs.clone(), r.outputs.clone(), matrix)?,
                message: r.message.clone(),
                controls: r.controls.clone(),
                adjoint: r.adjoint,
            });
        }
        let p = QuantumProtocol {
            x_dim: self.x_dim,
            y_dim: self.y_dim,
            entanglement,
            rounds,
            alice_output: self.alice_output.clone(),
            bob_output: self.bob_output.clone(),
            custom_order: self.custom_order,
        };
        let report = validate_protocol(&p);
        if !report.is_valid() {
            let v = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(qicost::error::QicError::Invalid(v).into());
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub x_dim: usize,
    pub y_dim: usize,
    /// µ(x, y) listed x-major.
    pub probs: Vec<f64>,
}

impl DistributionFile {
    pub fn from_distribution(mu: &InputDistribution) -> Self {
        Self {
            x_dim: mu.x_dim(),
            y_dim: mu.y_dim(),
            probs: mu.probabilities().to_vec(),
        }
    }

    pub fn to_distribution(&self) -> Result<InputDistribution, CliError> {
        Ok(InputDistribution::new(self.x_dim, self.y_dim, self.probs.clone())?)
    }
}

/// A reversible circuit given either as an explicit table or as a gate list over bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitFile {
    Gates {
        owner: Party,
        inputs: Vec<RegisterLabel>,
        #[serde(default)]
        ancillas: Vec<RegisterLabel>,
        gates: Vec<Gate>,
        #[serde(default)]
        renames: Vec<(String, String)>,
        #[serde(default)]
        message: Vec<String>,
    },
    Table(Circuit),
}

impl CircuitFile {
    fn to_circuit(&self) -> Result<Circuit, CliError> {
        match self {
            CircuitFile::Table(c) => Ok(c.clone()),
            CircuitFile::Gates {
                owner,
                inputs,
                ancillas,
                gates,
                renames,
                message,
            } => {
                let renames: Vec<(&str, &str)> = renames.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                let message: Vec<&str> = message.iter().map(String::as_str).collect();
                Ok(Circuit::from_gates(
                    *owner,
                    inputs.clone(),
                    ancillas.clone(),
                    gates,
                    &renames,
                    &message,
                )?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibleFile {
    pub x_dim: usize,
    pub y_dim: usize,
    #[serde(default = "no_coin")]
    pub alice_coin: Vec<f64>,
    #[serde(default = "no_coin")]
    pub bob_coin: Vec<f64>,
    #[serde(default = "no_coin")]
    pub public_coin: Vec<f64>,
    pub circuits: Vec<CircuitFile>,
    #[serde(default)]
    pub alice_output: Vec<String>,
    #[serde(default)]
    pub bob_output: Vec<String>,
}

fn no_coin() -> Vec<f64> {
    vec![1.0]
}

impl ReversibleFile {
    pub fn to_protocol(&self) -> Result<ReversibleProtocol, CliError> {
        let rp = ReversibleProtocol {
            x_dim: self.x_dim,
            y_dim: self.y_dim,
            alice_coin: self.alice_coin.clone(),
            bob_coin: self.bob_coin.clone(),
            public_coin: self.public_coin.clone(),
            circuits: self.circuits.iter().map(CircuitFile::to_circuit).collect::<Result<_, _>>()?,
            alice_output: self.alice_output.clone(),
            bob_output: self.bob_output.clone(),
        };
        rp.validate()?;
        Ok(rp)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_protocol(path: &Path) -> Result<QuantumProtocol, CliError> {
    read_json::<ProtocolFile>(path)?.to_protocol()
}

pub fn read_distribution(path: &Path) -> Result<InputDistribution, CliError> {
    read_json::<DistributionFile>(path)?.to_distribution()
}

pub fn read_classical(path: &Path) -> Result<ClassicalProtocol, CliError> {
    let pi: ClassicalProtocol = read_json(path)?;
    pi.validate()?;
    Ok(pi)
}

pub fn read_reversible(path: &Path) -> Result<ReversibleProtocol, CliError> {
    read_json::<ReversibleFile>(path)?.to_protocol()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
