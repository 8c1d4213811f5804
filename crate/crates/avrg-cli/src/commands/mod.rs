pub mod cluster;
pub mod evaluate;
pub mod extract;
pub mod generate;
pub mod inspect;
pub mod pipeline;
pub mod replay;
