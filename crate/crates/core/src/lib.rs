//! Influence diagrams and game trees for agents with inconsistent beliefs.
pub mod bn;
pub mod dot;
pub mod efg;
pub mod evaluation_game;
pub mod finite_depth;
pub mod generate;
pub mod ii_efg;
pub mod ii_maid;
pub mod io;
pub mod maid;
pub mod simulate;
