#pragma once

#include "nudge/context.hpp"
#include "nudge/explanation_pool.hpp"
#include "nudge/random.hpp"
#include "nudge/user_model.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace nudge::engine {

// Sum over the grid of |user(d) - policy(d)|; lies in [0, 2].
// Throws ContractError when the two distributions have different sizes.
double expected_distance(std::span<const double> user_dist, std::span<const double> policy_dist);

struct ScoredConfig {
    explain::ExplanationConfig config;
    double distance{0.0};
};

struct NudgeDecision {
    explain::ExplanationConfig chosen;
    double distance{0.0};
    std::vector<ScoredConfig> scored; // every evaluated candidate, in evaluation order
    bool exhaustive{true};
};

// Maps a candidate config to the predicted user decision distribution.
using UserPredictor = std::function<std::vector<double>(const explain::ExplanationConfig&)>;

UserPredictor model_predictor(const usermodel::Params& params, const ContextFeatures& context,
                              const explain::ExplanationPool& pool, double nudge_strength = 1.0);

// Exhaustive argmin over configs; the first config (in list order) achieving
// the minimum wins. Throws ContractError on an empty list.
NudgeDecision select_config(const UserPredictor& predictor, std::span<const double> policy_dist,
                            const std::vector<explain::ExplanationConfig>& configs);

NudgeDecision select_config(const usermodel::Params& params, std::span<const double> policy_dist,
                            const ContextFeatures& context, const explain::ExplanationPool& pool,
                            const std::vector<explain::ExplanationConfig>& configs,
                            double nudge_strength = 1.0);

struct SearchOptions {
    std::size_t exhaustive_limit{4096};
    std::size_t beam_width{32};
    double nudge_strength{1.0};
};

// Exhaustive when config_count(pool, mode) <= exhaustive_limit; otherwise a
// beam search over single flag flips, seeded with the mode's default config,
// so the result is never worse than the default.
NudgeDecision search_configs(const UserPredictor& predictor, std::span<const double> policy_dist,
                             const explain::ExplanationPool& pool, const explain::BiasingMode& mode,
                             const SearchOptions& options = {});

enum class Selection {
    Optimize, // argmin of the expected distance
    Random,   // uniform over the enumeration; used to collect exploration logs
    Default,  // always the mode's default config (control condition)
};

std::string_view to_string(Selection selection);
std::optional<Selection> parse_selection(std::string_view text);

// Per-day glue: builds the candidate set, scores it against the policy
// distribution and returns the decision with its audit list.
class Nudger {
public:
    // Throws ConfigError when selection is Optimize and no user model is given.
    Nudger(explain::ExplanationPool pool, explain::BiasingMode mode, Selection selection,
           std::shared_ptr<const usermodel::Params> user_model, SearchOptions options = {});

    NudgeDecision nudge_step(const ContextFeatures& context, std::span<const double> policy_dist,
                             Rng& rng) const;

    [[nodiscard]] const explain::ExplanationPool& pool() const noexcept { return pool_; }
    [[nodiscard]] const explain::BiasingMode& mode() const noexcept { return mode_; }
    [[nodiscard]] Selection selection() const noexcept { return selection_; }

private:
    explain::ExplanationPool pool_;
    explain::BiasingMode mode_;
    Selection selection_;
    std::shared_ptr<const usermodel::Params> user_model_;
    SearchOptions options_;
    std::vector<explain::ExplanationConfig> enumerated_; // empty when beyond the exhaustive limit
};

} // namespace nudge::engine
