#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fldcrf/model_spec.hpp"
#include "fldcrf/sequence.hpp"

namespace fldcrf::testing {

/// Two labels, each emitting 2-D Gaussian frames from one of two hidden regimes.
/// Label 0 regimes sit at (+-mean, 0), label 1 regimes at (0, +-mean), so no single
/// linear score per label separates the classes while one score per regime does.
struct RegimeTaskOptions {
    std::size_t train_sequences = 40;
    std::size_t test_sequences = 10;
    std::size_t length = 100;
    double mean = 2.0;
    double noise = 0.5;
    double label_stay = 0.95;
    double regime_switch = 0.1;
};

struct Split {
    std::vector<Sequence> train;
    std::vector<Sequence> test;
};

Split regime_task(std::uint64_t seed, const RegimeTaskOptions& options = {});

/// Binary labels decided by the sign of feature 0, |feature 0| uniform in [min_magnitude, 1];
/// feature 1 is noise.
std::vector<Sequence> separable_task(std::uint64_t seed, std::size_t sequences, std::size_t length,
                                     double min_magnitude = 0.2);

/// Box-Muller standard normal from raw engine bits.
double standard_normal(std::mt19937_64& rng);

/// Single binary category {l0, l1} for the tasks above.
ModelSpec binary_task_spec(ModelKind kind, std::size_t layers, std::size_t states, std::size_t dim = 2);

/// predict_online on every sequence.
std::vector<LabelTracks> predict_all(const ModelSpec& spec, std::span<const double> theta,
                                     const std::vector<Sequence>& data);

/// Fraction of frames (all categories) where prediction equals truth.
double token_accuracy(const std::vector<LabelTracks>& predicted, const std::vector<Sequence>& truth);

}  // namespace fldcrf::testing
