pub mod bootstrap_cmd;
pub mod build_hif;
pub mod curves_cmd;
pub mod evaluate_cmd;
pub mod pipeline;
pub mod similarity_cmd;
pub mod split;
pub mod squeeze_cmd;
pub mod train_cmd;
