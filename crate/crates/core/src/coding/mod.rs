//! Random coding over black-box channels: i.i.d. codebooks, joint-typicality decoding,
//! Monte Carlo error estimates, the union-bound error exponent and the separation chain.

mod codebook;
mod exponent;
mod pipeline;
mod simulate;

pub use codebook::{
    compositions, generate_iid_codebook, generate_type_codebook, log2_size, prob_any, typicality_decode, Codebook, CodebookMode,
    Decoded, LetterSampler, MatchProbability, TypicalityTest, MAX_EXPLICIT_LOG2,
};
pub use exponent::{error_exponent_bound, kl_chain_report, ExponentQuery, ExponentResult, KlChain};
pub use pipeline::{
    bits_to_index, index_to_bits, separation_pipeline, ChannelCode, PipelineConfig, PipelineKernelReport, PipelineProfile,
    SourceCode, EXPLICIT_PIPELINE_LOG2,
};
pub use simulate::{simulate_decay, simulate_reliable_comm, DecayRecord, ErrorProfile, KernelErrors, SimulationConfig, SimulationMode};
