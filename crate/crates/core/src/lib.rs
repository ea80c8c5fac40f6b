pub mod corpus;
pub mod encoder;
pub mod evaluation;
pub mod inference;
pub mod interface;
pub mod numerics;
pub mod text;
pub mod tokenizer;
pub mod training;
