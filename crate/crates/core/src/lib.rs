pub mod biasaudit;
pub mod classifier;
pub mod corpus;
pub mod counterfactual;
pub mod evaluation;
pub mod seed;
pub mod synth;
pub mod text;
pub mod zeroshot;
