#include "nudge/user_model.hpp"

#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace nudge::usermodel {

using nlohmann::json;

std::vector<double> featurize(const ContextFeatures& context,
                              const explain::ExplanationConfig& config,
                              const explain::ExplanationPool& pool, double emphasis_scale) {
    const double span = context.grid_size > 1 ? static_cast<double>(context.grid_size - 1) : 1.0;
    std::vector<double> f(kFeatureWidth, 0.0);
    f[0] = context.forecast.p_bullish;
    f[1] = context.forecast.p_neutral;
    f[2] = context.forecast.p_bearish;
    f[3] = static_cast<double>(context.position_index) / span;
    f[4] = static_cast<double>(context.last_decision_index) / span;
    f[5] = context.day_fraction;
    f[6] = context.trailing_return;
    f[7] = context.assets_ratio;

    const explain::ExplanationConfig canon =
        config.is_canonical() ? config : config.canonical();
    for (const auto& entry : canon.entries) {
        const explain::Explanation* e = pool.find(entry.id);
        if (e == nullptr) {
            throw ReferenceError("featurize: unknown explanation id '" + entry.id + "'");
        }
        const std::size_t slot = kContextWidth + 2 * static_cast<std::size_t>(e->label);
        if (entry.shown) {
            f[slot] = 1.0;
        }
        if (entry.emphasized) {
            f[slot + 1] = emphasis_scale;
        }
    }
    return f;
}

Params Params::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
    Params p;
    p.input = input;
    p.hidden = hidden;
    p.output = output;
    p.w1.assign(hidden * input, 0.0);
    p.b1.assign(hidden, 0.0);
    p.w2.assign(output * hidden, 0.0);
    p.b2.assign(output, 0.0);
    return p;
}

Params Params::random(std::size_t input, std::size_t hidden, std::size_t output,
                      std::uint64_t seed, double gain) {
    Params p = zeros(input, hidden, output);
    Rng rng(seed);
    const double r1 = gain * std::sqrt(6.0 / static_cast<double>(input + hidden));
    const double r2 = gain * std::sqrt(6.0 / static_cast<double>(hidden + output));
    for (double& w : p.w1) {
        w = r1 * (2.0 * uniform01(rng) - 1.0);
    }
    for (double& w : p.w2) {
        w = r2 * (2.0 * uniform01(rng) - 1.0);
    }
    return p;
}

std::size_t Params::parameter_count() const noexcept {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

std::vector<double> Params::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto* v : {&w1, &b1, &w2, &b2}) {
        flat.insert(flat.end(), v->begin(), v->end());
    }
    return flat;
}

void Params::assign_flat(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
        throw ContractError("assign_flat: size mismatch");
    }
    std::size_t offset = 0;
    for (auto* v : {&w1, &b1, &w2, &b2}) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), v->size(), v->begin());
        offset += v->size();
    }
}

bool Params::finite() const {
    for (const auto* v : {&w1, &b1, &w2, &b2}) {
        for (double x : *v) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
    }
    return true;
}

namespace {

void check_shape(const Params& params, std::size_t features) {
    if (features != params.input) {
        throw ContractError("user model: expected " + std::to_string(params.input) +
                            " features, got " + std::to_string(features));
    }
}

// Forward pass into caller-provided buffers; probs gets the softmax.
void forward(const Params& p, std::span<const double> x, std::vector<double>& hidden,
             std::vector<double>& probs) {
    hidden.resize(p.hidden);
    probs.resize(p.output);
    for (std::size_t j = 0; j < p.hidden; ++j) {
        const double* row = &p.w1[j * p.input];
        double a = p.b1[j];
        for (std::size_t i = 0; i < p.input; ++i) {
            a += row[i] * x[i];
        }
        hidden[j] = std::tanh(a);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.output; ++k) {
        const double* row = &p.w2[k * p.hidden];
        double z = p.b2[k];
        for (std::size_t j = 0; j < p.hidden; ++j) {
            z += row[j] * hidden[j];
        }
        probs[k] = z;
        top = std::max(top, z);
    }
    double sum = 0.0;
    for (double& z : probs) {
        z = std::exp(z - top);
        sum += z;
    }
    for (double& z : probs) {
        z /= sum;
    }
}

std::string echo(std::span<const double> x) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << (i ? ", " : "") << x[i];
    }
    out << ']';
    return out.str();
}

double l2_penalty(const Params& p, double l2) {
    if (l2 == 0.0) {
        return 0.0;
    }
    double s = 0.0;
    for (double w : p.w1) {
        s += w * w;
    }
    for (double w : p.w2) {
        s += w * w;
    }
    return 0.5 * l2 * s;
}

} // namespace

std::vector<double> predict(const Params& params, std::span<const double> features) {
    check_shape(params, features.size());
    std::vector<double> hidden;
    std::vector<double> probs;
    forward(params, features, hidden, probs);
    for (double p : probs) {
        if (!std::isfinite(p)) {
            throw NumericError("user model: non-finite output for input " + echo(features));
        }
    }
    return probs;
}

std::vector<double> predict(const Params& params, const ContextFeatures& context,
                            const explain::ExplanationConfig& config,
                            const explain::ExplanationPool& pool, double emphasis_scale) {
    return predict(params, featurize(context, config, pool, emphasis_scale));
}

double loss(const Params& params, std::span<const Example> data, double l2) {
    if (data.empty()) {
        return l2_penalty(params, l2);
    }
    std::vector<double> hidden;
    std::vector<double> probs;
    double total = 0.0;
    for (const auto& ex : data) {
        check_shape(params, ex.features.size());
        forward(params, ex.features, hidden, probs);
        total -= std::log(std::max(probs[ex.label], std::numeric_limits<double>::min()));
    }
    return total / static_cast<double>(data.size()) + l2_penalty(params, l2);
}

namespace {

double gradient_over(const Params& params, std::span<const Example* const> data, double l2,
                     Params& grad) {
    grad = Params::zeros(params.input, params.hidden, params.output);
    if (data.empty()) {
        return l2_penalty(params, l2);
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    std::vector<double> hidden;
    std::vector<double> probs;
    std::vector<double> dhidden(params.hidden);
    double total = 0.0;
    for (const Example* ex : data) {
        check_shape(params, ex->features.size());
        forward(params, ex->features, hidden, probs);
        total -= std::log(std::max(probs[ex->label], std::numeric_limits<double>::min()));

        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (std::size_t k = 0; k < params.output; ++k) {
            const double dz = (probs[k] - (k == ex->label ? 1.0 : 0.0)) * inv_n;
            grad.b2[k] += dz;
            double* grow = &grad.w2[k * params.hidden];
            const double* wrow = &params.w2[k * params.hidden];
            for (std::size_t j = 0; j < params.hidden; ++j) {
                grow[j] += dz * hidden[j];
                dhidden[j] += dz * wrow[j];
            }
        }
        for (std::size_t j = 0; j < params.hidden; ++j) {
            const double da = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
            grad.b1[j] += da;
            double* grow = &grad.w1[j * params.input];
            for (std::size_t i = 0; i < params.input; ++i) {
                grow[i] += da * ex->features[i];
            }
        }
    }
    if (l2 != 0.0) {
        for (std::size_t i = 0; i < params.w1.size(); ++i) {
            grad.w1[i] += l2 * params.w1[i];
        }
        for (std::size_t i = 0; i < params.w2.size(); ++i) {
            grad.w2[i] += l2 * params.w2[i];
        }
    }
    return total * inv_n + l2_penalty(params, l2);
}

std::vector<const Example*> pointers(std::span<const Example> data) {
    std::vector<const Example*> out;
    out.reserve(data.size());
    for (const auto& ex : data) {
        out.push_back(&ex);
    }
    return out;
}

} // namespace

double loss_and_gradient(const Params& params, std::span<const Example> data, double l2,
                         Params& grad) {
    const auto ptrs = pointers(data);
    return gradient_over(params, ptrs, l2, grad);
}

void Hyper::validate() const {
    if (hidden == 0) {
        throw ValidationError("user_model.hidden: must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("user_model.learning_rate: must be positive");
    }
    if (!(l2 >= 0.0)) {
        throw ValidationError("user_model.l2: must be non-negative");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ValidationError("user_model.validation_fraction: must lie in [0, 1)");
    }
}

double TrainingReport::final_train_loss() const {
    return epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : epochs.back().train_loss;
}

double TrainingReport::final_val_loss() const {
    return epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : epochs.back().val_loss;
}

TrainingReport train(const std::vector<Example>& data, std::size_t output, const Hyper& hyper,
                     std::uint64_t seed) {
    hyper.validate();
    if (data.empty()) {
        throw DataError("train_user_model: no training records");
    }
    for (const auto& ex : data) {
        if (ex.label >= output) {
            throw DataError("train_user_model: label " + std::to_string(ex.label) +
                            " outside the position grid");
        }
    }
    const std::size_t input = data.front().features.size();

    // Episode-level split.
    std::set<std::string> episode_set;
    for (const auto& ex : data) {
        episode_set.insert(ex.episode);
    }
    std::vector<std::string> episodes(episode_set.begin(), episode_set.end());
    Rng split_rng(derive_seed(seed, 0x5b17));
    for (std::size_t i = episodes.size(); i > 1; --i) {
        std::swap(episodes[i - 1], episodes[uniform_index(split_rng, i)]);
    }
    std::set<std::string> held_out;
    if (episodes.size() >= 2 && hyper.validation_fraction > 0.0) {
        const auto n_val = static_cast<std::size_t>(
            std::ceil(hyper.validation_fraction * static_cast<double>(episodes.size())));
        for (std::size_t i = 0; i < std::min(n_val, episodes.size() - 1); ++i) {
            held_out.insert(episodes[i]);
        }
    }
    std::vector<Example> train_set;
    std::vector<Example> val_set;
    for (const auto& ex : data) {
        (held_out.count(ex.episode) ? val_set : train_set).push_back(ex);
    }

    TrainingReport report;
    report.params = Params::random(input, hyper.hidden, output, derive_seed(seed, 0x1417));
    report.train_count = train_set.size();
    report.val_count = val_set.size();
    report.val_episodes.assign(held_out.begin(), held_out.end());

    Params& params = report.params;
    Params grad;
    std::vector<double> m(params.parameter_count(), 0.0);
    std::vector<double> v(params.parameter_count(), 0.0);
    std::size_t step = 0;
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;

    std::vector<const Example*> order = pointers(train_set);
    Rng shuffle_rng(derive_seed(seed, 0x5aff));
    const std::size_t batch =
        hyper.batch_size == 0 ? train_set.size() : std::min(hyper.batch_size, train_set.size());

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        if (batch < train_set.size()) {
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);
            }
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const std::span<const Example* const> batch_view(order.data() + start, end - start);
            gradient_over(params, batch_view, hyper.l2, grad);
            std::vector<double> theta = params.flatten();
            const std::vector<double> g = grad.flatten();
            ++step;
            if (hyper.optimizer == Optimizer::Sgd) {
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    theta[i] -= hyper.learning_rate * g[i];
                }
            } else {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    theta[i] -= hyper.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
                }
            }
            params.assign_flat(theta);
            if (!params.finite()) {
                throw NumericError("train_user_model: non-finite parameters at epoch " +
                                   std::to_string(epoch));
            }
        }
        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.train_loss = loss(params, train_set, hyper.l2);
        stats.val_loss = val_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : loss(params, val_set, 0.0);
        report.epochs.push_back(stats);
    }
    return report;
}

Example example_from_record(const InteractionRecord& record, const explain::ExplanationPool& pool) {
    return {featurize(record.context, record.config, pool), record.decision_index,
            record.session_id};
}

TrainingReport train_user_model(const std::vector<InteractionRecord>& logs,
                                const explain::ExplanationPool& pool, const Hyper& hyper,
                                std::uint64_t seed) {
    if (logs.empty()) {
        throw DataError("train_user_model: empty interaction log");
    }
    std::vector<Example> data;
    data.reserve(logs.size());
    for (const auto& r : logs) {
        data.push_back(example_from_record(r, pool));
    }
    return train(data, logs.front().context.grid_size, hyper, seed);
}

std::string to_json(const Params& params) {
    json doc = {
        {"format", "nudgexai.usermodel"},
        {"version", 1},
        {"activation", "tanh"},
        {"layers",
         json::array({
             {{"shape", {params.hidden, params.input}}, {"weights", params.w1}, {"bias", params.b1}},
             {{"shape", {params.output, params.hidden}}, {"weights", params.w2}, {"bias", params.b2}},
         })},
    };
    return doc.dump(1) + "\n";
}

Params params_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("user model: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw DataError("user model: expected a JSON object");
    }
    try {
        if (doc.value("format", "") != "nudgexai.usermodel" || doc.value("version", 0) != 1) {
            throw DataError("user model: unsupported format or version");
        }
        const auto& layers = doc.at("layers");
        if (layers.size() != 2) {
            throw DataError("user model: expected two layers");
        }
        const auto s1 = layers[0].at("shape").get<std::vector<std::size_t>>();
        const auto s2 = layers[1].at("shape").get<std::vector<std::size_t>>();
        if (s1.size() != 2 || s2.size() != 2 || s2[1] != s1[0]) {
            throw DataError("user model: inconsistent layer shapes");
        }
        Params p = Params::zeros(s1[1], s1[0], s2[0]);
        p.w1 = layers[0].at("weights").get<std::vector<double>>();
        p.b1 = layers[0].at("bias").get<std::vector<double>>();
        p.w2 = layers[1].at("weights").get<std::vector<double>>();
        p.b2 = layers[1].at("bias").get<std::vector<double>>();
        if (p.w1.size() != p.hidden * p.input || p.b1.size() != p.hidden ||
            p.w2.size() != p.output * p.hidden || p.b2.size() != p.output) {
            throw DataError("user model: weight arrays do not match shapes");
        }
        if (!p.finite()) {
            throw DataError("user model: non-finite parameters");
        }
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("user model: malformed document: ") + e.what());
    }
}

void save_params(const std::filesystem::path& path, const Params& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << to_json(params);
}

Params load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return params_from_json(buf.str());
}

void write_training_csv(std::ostream& out, const TrainingReport& report) {
    out << "epoch,train_loss,val_loss\n";
    out.precision(10);
    for (const auto& e : report.epochs) {
        out << e.epoch << ',' << e.train_loss << ',';
        if (std::isfinite(e.val_loss)) {
            out << e.val_loss;
        }
        out << '\n';
    }
}

} // namespace nudge::usermodel
