#pragma once

#include "nudge/context.hpp"
#include "nudge/explanation_pool.hpp"
#include "nudge/record.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nudge::usermodel {

// Feature layout (width 14):
//   [0..2]  forecast probabilities (bullish, neutral, bearish)
//   [3]     current position index / (grid_size - 1)
//   [4]     last decision index / (grid_size - 1)
//   [5]     day / num_days
//   [6]     trailing five-day return
//   [7]     total assets / initial cash
//   [8..13] (shown, emphasized) per label, in bullish, neutral, bearish order
inline constexpr std::size_t kContextWidth = 8;
inline constexpr std::size_t kConfigWidth = 2 * forecast::kNumLabels;
inline constexpr std::size_t kFeatureWidth = kContextWidth + kConfigWidth;

// A label's bits are the OR over the pool entries with that label. The config
// is canonicalized first. Emphasis bits are multiplied by emphasis_scale (the
// nudge-strength hook; 1.0 leaves them unchanged).
std::vector<double> featurize(const ContextFeatures& context,
                              const explain::ExplanationConfig& config,
                              const explain::ExplanationPool& pool, double emphasis_scale = 1.0);

// One hidden tanh layer, softmax output over the position grid.
// Weights are row-major: w1 is hidden x input, w2 is output x hidden.
struct Params {
    std::size_t input{kFeatureWidth};
    std::size_t hidden{0};
    std::size_t output{0};
    std::vector<double> w1, b1, w2, b2;

    static Params zeros(std::size_t input, std::size_t hidden, std::size_t output);
    // Xavier-uniform weights scaled by gain, zero biases.
    static Params random(std::size_t input, std::size_t hidden, std::size_t output,
                         std::uint64_t seed, double gain = 1.0);

    [[nodiscard]] std::size_t parameter_count() const noexcept;
    // Flat views in order w1, b1, w2, b2.
    [[nodiscard]] std::vector<double> flatten() const;
    void assign_flat(std::span<const double> flat);
    [[nodiscard]] bool finite() const;

    bool operator==(const Params&) const = default;
};

// Throws NumericError (echoing the input) if any logit is non-finite.
std::vector<double> predict(const Params& params, std::span<const double> features);
std::vector<double> predict(const Params& params, const ContextFeatures& context,
                            const explain::ExplanationConfig& config,
                            const explain::ExplanationPool& pool, double emphasis_scale = 1.0);

struct Example {
    std::vector<double> features;
    std::size_t label{0};
    std::string episode; // split key
};

// Mean cross-entropy plus (l2 / 2) * ||weights||^2 (biases excluded).
double loss(const Params& params, std::span<const Example> data, double l2);
// Same loss; gradient written to grad (shape of params).
double loss_and_gradient(const Params& params, std::span<const Example> data, double l2,
                         Params& grad);

enum class Optimizer { Sgd, Adam };

struct Hyper {
    std::size_t hidden{32};
    double learning_rate{0.01};
    std::size_t epochs{60};
    std::size_t batch_size{64}; // 0 = full batch
    double l2{1e-4};
    Optimizer optimizer{Optimizer::Adam};
    double validation_fraction{0.2};

    void validate() const;
};

struct EpochStats {
    std::size_t epoch{0};
    double train_loss{0.0};
    double val_loss{0.0}; // NaN when there is no held-out split
};

struct TrainingReport {
    Params params;
    std::vector<EpochStats> epochs;
    std::size_t train_count{0};
    std::size_t val_count{0};
    std::vector<std::string> val_episodes;

    [[nodiscard]] double final_train_loss() const;
    [[nodiscard]] double final_val_loss() const;
};

// Held-out split is by episode: the distinct episode keys are shuffled with
// seed and ceil(validation_fraction * episodes) of them are held out, when
// there are at least two episodes. Throws DataError on empty data.
TrainingReport train(const std::vector<Example>& data, std::size_t output, const Hyper& hyper,
                     std::uint64_t seed);

Example example_from_record(const InteractionRecord& record, const explain::ExplanationPool& pool);

// Throws DataError on an empty log or an off-grid label.
TrainingReport train_user_model(const std::vector<InteractionRecord>& logs,
                                const explain::ExplanationPool& pool, const Hyper& hyper,
                                std::uint64_t seed);

std::string to_json(const Params& params);
Params params_from_json(const std::string& text);
void save_params(const std::filesystem::path& path, const Params& params);
Params load_params(const std::filesystem::path& path);

void write_training_csv(std::ostream& out, const TrainingReport& report);

} // namespace nudge::usermodel
