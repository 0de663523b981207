"""Randomized lattice decoding: sampling-based list decoders with LLL preprocessing."""

from .decoders import (ConstellationBox, DecodeResult, PreprocessedComplexLattice,
                       PreprocessedLattice, cvp_enumerate, exhaustive_ml,
                       klein_sample, klein_sample_batch, klein_sample_complex,
                       mmse_extend, preprocess, preprocess_complex,
                       randomized_decode, randomized_decode_batch, sic_decode,
                       sic_decode_complex)
from .errors import (ConfigError, DegenerateBasisError, GainLimitError,
                     ParameterError, RldError, SizeGuardError,
                     UniformSamplingRegimeError)
from .lattice import (ComplexModel, LatticeBasis, OrthogonalizationData,
                      ReductionResult, lll_reduce, lll_reduce_complex,
                      load_basis_text, orthogonalize, orthogonalize_complex,
                      proximity_bounds, real_embed, save_basis_text)
from .mimo import (BerRecord, DecoderSpec, ExperimentConfig, gen_channel,
                   golden_generator, load_generator, parse_config, qam_demap,
                   qam_map, qam_scale, run_experiment, write_csv)
from .sampler import (RoundingDistribution, SamplerParams, pseudo_min_distance,
                      rand_round, rand_round_batch, required_k, s_of_confidence,
                      s_upper_bound, solve_rho, statistical_distance,
                      truncated_pmf)

__version__ = "0.1.0"
