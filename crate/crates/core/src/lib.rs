//! Quantum architecture search toolkit.
//!
//! The crate is organized around a gate-level circuit IR ([`circuit`]), a
//! dense statevector simulator with Pauli-noise trajectories ([`sim`]), a
//! reverse-mode gradient engine with quantum nodes ([`autodiff`]), a
//! quantum feature-map self-attention encoder ([`encoder`]), a differentiable
//! architecture search loop ([`search`]), a peephole circuit optimizer
//! ([`optimize`]), and two evaluation backends: ground-state energy
//! minimization ([`vqe`]) and sensor-network routing via QUBO/Ising
//! ([`wsn`]).

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod autodiff;
pub mod circuit;
pub mod encoder;
pub mod optim;
pub mod optimize;
pub mod search;
pub mod sim;
pub mod vqe;
pub mod wsn;

pub use circuit::{
    build_pool, circuit_metrics, inverse_circuit, parse_circuit, realize_circuit,
    serialize_circuit, Circuit, CircuitError, DeviceTopology, GateInstance, GateKind, GateParam,
    OperationPool, PoolEntry,
};
pub use sim::{
    exact_ground_energy, expectation, param_shift_grad, parse_pauli_sum, run, sample,
    NoiseProfile, PauliOp, PauliString, PauliSum, ShotResult, ShotsPolicy, SimError, StateVector,
};
