#include "nudge/config.hpp"

#include "nudge/errors.hpp"
#include "nudge/toml_lite.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace nudge {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& doc, std::string path) : path_(std::move(path)) {
        if (!doc.is_object()) {
            throw ConfigError(path_ + ": expected a table");
        }
        doc_ = &doc;
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) {
            return;
        }
        for (const auto& [key, _] : doc_->items()) {
            if (!used_.count(key)) {
                throw ConfigError(path_ + "." + key + ": unknown key");
            }
        }
    }

    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        if (!doc_->contains(key)) {
            return;
        }
        try {
            out = doc_->at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    void read_seed(const char* key, std::uint64_t& out) {
        used_.insert(key);
        if (!doc_->contains(key)) {
            return;
        }
        const auto& v = doc_->at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }

    void read_size(const char* key, std::size_t& out) {
        std::uint64_t v = out;
        read_seed(key, v);
        out = static_cast<std::size_t>(v);
    }

    const json* child(const char* key) {
        used_.insert(key);
        return doc_->contains(key) ? &doc_->at(key) : nullptr;
    }

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    const json* doc_{nullptr};
    std::string path_;
    std::set<std::string> used_;
};

void read_archetype(const json& doc, const std::string& path, archetype::Params& p) {
    Section s(doc, path);
    s.read("susceptibility", p.susceptibility);
    s.read_size("lag", p.lag);
    s.read("noise", p.noise);
    s.read("cap", p.cap);
    s.read("trade_prob", p.trade_prob);
    s.read("reliance_drift", p.reliance_drift);
}

} // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
    ExperimentConfig c;
    Section root(doc, "config");

    if (const json* j = root.child("episode")) {
        Section s(*j, "episode");
        s.read("initial_cash", c.episode.initial_cash);
        s.read_size("num_days", c.episode.num_days);
        s.read_seed("seed", c.episode.rng_seed);
        if (const json* g = s.child("grid")) {
            std::vector<double> fractions;
            try {
                fractions = g->get<std::vector<double>>();
            } catch (const json::exception&) {
                throw ConfigError("episode.grid: expected an array of numbers");
            }
            try {
                c.episode.grid = PositionGrid(std::move(fractions));
            } catch (const ValidationError& e) {
                throw ValidationError(std::string("episode.grid: ") + e.what());
            }
        }
    }
    if (const json* j = root.child("market")) {
        Section s(*j, "market");
        s.read("start_price", c.market.start_price);
        s.read("volatility", c.market.volatility);
        s.read("drift", c.market.drift);
        s.read("regime_drifts", c.market.regime_drifts);
        s.read("regime_switch_prob", c.market.regime_switch_prob);
        s.read_seed("eval_seed", c.eval_seed);
    }
    if (const json* j = root.child("forecaster")) {
        Section s(*j, "forecaster");
        s.read("accuracy", c.forecaster.accuracy);
        s.read("up_threshold", c.forecaster.thresholds.up);
        s.read("down_threshold", c.forecaster.thresholds.down);
    }
    if (const json* j = root.child("policy")) {
        Section s(*j, "policy");
        s.read_size("episodes", c.policy.episodes);
        s.read("gamma", c.policy.hyper.gamma);
        s.read("alpha", c.policy.hyper.alpha);
        s.read("visit_decay", c.policy.hyper.visit_decay);
        s.read("alpha_min", c.policy.hyper.alpha_min);
        s.read("epsilon_start", c.policy.hyper.epsilon_start);
        s.read("epsilon_end", c.policy.hyper.epsilon_end);
        s.read("epsilon_decay_fraction", c.policy.hyper.epsilon_decay_fraction);
        s.read("temperature", c.policy.temperature);
        s.read_seed("seed", c.policy.seed);
    }
    if (const json* j = root.child("user_model")) {
        Section s(*j, "user_model");
        s.read_size("hidden", c.user_model.hyper.hidden);
        s.read("learning_rate", c.user_model.hyper.learning_rate);
        s.read_size("epochs", c.user_model.hyper.epochs);
        s.read_size("batch_size", c.user_model.hyper.batch_size);
        s.read("l2", c.user_model.hyper.l2);
        s.read("validation_fraction", c.user_model.hyper.validation_fraction);
        std::string optimizer = c.user_model.hyper.optimizer == usermodel::Optimizer::Adam ? "adam" : "sgd";
        s.read("optimizer", optimizer);
        if (optimizer == "adam") {
            c.user_model.hyper.optimizer = usermodel::Optimizer::Adam;
        } else if (optimizer == "sgd") {
            c.user_model.hyper.optimizer = usermodel::Optimizer::Sgd;
        } else {
            throw ConfigError("user_model.optimizer: expected 'adam' or 'sgd'");
        }
        s.read_seed("seed", c.user_model.seed);
        s.read_size("exploration_episodes", c.user_model.exploration_episodes);
    }
    if (const json* j = root.child("nudge")) {
        Section s(*j, "nudge");
        std::string mode(explain::to_string(c.nudge.mode.mode));
        s.read("mode", mode);
        const auto parsed_mode = explain::parse_mode(mode);
        if (!parsed_mode) {
            throw ConfigError("nudge.mode: expected 'dynemph' or 'xselector'");
        }
        c.nudge.mode.mode = *parsed_mode;
        s.read_size("budget", c.nudge.mode.budget);
        std::string selection(engine::to_string(c.nudge.selection));
        s.read("selection", selection);
        const auto parsed_sel = engine::parse_selection(selection);
        if (!parsed_sel) {
            throw ConfigError("nudge.selection: expected 'optimize', 'random' or 'none'");
        }
        c.nudge.selection = *parsed_sel;
        s.read_size("exhaustive_limit", c.nudge.search.exhaustive_limit);
        s.read_size("beam_width", c.nudge.search.beam_width);
        s.read("strength", c.nudge.search.nudge_strength);
    }
    if (const json* j = root.child("cohort")) {
        Section s(*j, "cohort");
        s.read_size("ai_aligned", c.cohort.counts.ai_aligned);
        s.read_size("delayed", c.cohort.counts.delayed);
        s.read_size("cautious", c.cohort.counts.cautious);
        s.read_size("contrarian", c.cohort.counts.contrarian);
        s.read_seed("seed", c.cohort.seed);
        s.read("jitter", c.cohort.jitter);
        if (const json* p = s.child("params")) {
            Section ps(*p, "cohort.params");
            for (archetype::Kind kind : archetype::kAllKinds) {
                const std::string name(archetype::to_string(kind));
                if (const json* k = ps.child(name.c_str())) {
                    read_archetype(*k, "cohort.params." + name, c.cohort.base_for(kind));
                }
            }
        }
    }
    if (const json* j = root.child("analysis")) {
        Section s(*j, "analysis");
        s.read_size("n_components", c.analysis.n_components);
        s.read_size("k", c.analysis.k);
        s.read_size("window", c.analysis.window);
        s.read_seed("seed", c.analysis.seed);
    }
    if (const json* j = root.child("paths")) {
        Section s(*j, "paths");
        s.read("artifacts", c.paths.artifacts);
        s.read("logs", c.paths.logs);
        s.read("output", c.paths.output);
        s.read("pool", c.paths.pool);
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    episode.validate();
    forecaster.validate();
    policy.hyper.validate();
    user_model.hyper.validate();
    if (!(policy.temperature >= 0.0)) {
        throw ValidationError("policy.temperature: must be non-negative");
    }
    if (market.volatility < 0.0) {
        throw ValidationError("market.volatility: must be non-negative");
    }
    if (!(market.start_price > 0.0)) {
        throw ValidationError("market.start_price: must be positive");
    }
    if (!(market.regime_switch_prob >= 0.0 && market.regime_switch_prob <= 1.0)) {
        throw ValidationError("market.regime_switch_prob: must lie in [0, 1]");
    }
    if (nudge.search.beam_width == 0) {
        throw ValidationError("nudge.beam_width: must be positive");
    }
    if (!(nudge.search.nudge_strength >= 0.0)) {
        throw ValidationError("nudge.strength: must be non-negative");
    }
    if (analysis.k == 0 || analysis.n_components == 0) {
        throw ValidationError("analysis.k and analysis.n_components: must be positive");
    }
    if (!(cohort.jitter >= 0.0 && cohort.jitter < 1.0)) {
        throw ValidationError("cohort.jitter: must lie in [0, 1)");
    }
    for (const auto& p : cohort.base) {
        p.validate();
    }
}

json to_json(const ExperimentConfig& c) {
    json params = json::object();
    for (archetype::Kind kind : archetype::kAllKinds) {
        const auto& p = c.cohort.base_for(kind);
        params[std::string(archetype::to_string(kind))] = {
            {"susceptibility", p.susceptibility}, {"lag", p.lag},
            {"noise", p.noise},                   {"cap", p.cap},
            {"trade_prob", p.trade_prob},         {"reliance_drift", p.reliance_drift}};
    }
    const auto& grid = c.episode.grid.fractions();
    return {
        {"episode",
         {{"initial_cash", c.episode.initial_cash},
          {"num_days", c.episode.num_days},
          {"seed", c.episode.rng_seed},
          {"grid", std::vector<double>(grid.begin(), grid.end())}}},
        {"market",
         {{"start_price", c.market.start_price},
          {"volatility", c.market.volatility},
          {"drift", c.market.drift},
          {"regime_drifts", c.market.regime_drifts},
          {"regime_switch_prob", c.market.regime_switch_prob},
          {"eval_seed", c.eval_seed}}},
        {"forecaster",
         {{"accuracy", c.forecaster.accuracy},
          {"up_threshold", c.forecaster.thresholds.up},
          {"down_threshold", c.forecaster.thresholds.down}}},
        {"policy",
         {{"episodes", c.policy.episodes},
          {"gamma", c.policy.hyper.gamma},
          {"alpha", c.policy.hyper.alpha},
          {"visit_decay", c.policy.hyper.visit_decay},
          {"alpha_min", c.policy.hyper.alpha_min},
          {"epsilon_start", c.policy.hyper.epsilon_start},
          {"epsilon_end", c.policy.hyper.epsilon_end},
          {"epsilon_decay_fraction", c.policy.hyper.epsilon_decay_fraction},
          {"temperature", c.policy.temperature},
          {"seed", c.policy.seed}}},
        {"user_model",
         {{"hidden", c.user_model.hyper.hidden},
          {"learning_rate", c.user_model.hyper.learning_rate},
          {"epochs", c.user_model.hyper.epochs},
          {"batch_size", c.user_model.hyper.batch_size},
          {"l2", c.user_model.hyper.l2},
          {"validation_fraction", c.user_model.hyper.validation_fraction},
          {"optimizer", c.user_model.hyper.optimizer == usermodel::Optimizer::Adam ? "adam" : "sgd"},
          {"seed", c.user_model.seed},
          {"exploration_episodes", c.user_model.exploration_episodes}}},
        {"nudge",
         {{"mode", std::string(explain::to_string(c.nudge.mode.mode))},
          {"budget", c.nudge.mode.budget},
          {"selection", std::string(engine::to_string(c.nudge.selection))},
          {"exhaustive_limit", c.nudge.search.exhaustive_limit},
          {"beam_width", c.nudge.search.beam_width},
          {"strength", c.nudge.search.nudge_strength}}},
        {"cohort",
         {{"ai_aligned", c.cohort.counts.ai_aligned},
          {"delayed", c.cohort.counts.delayed},
          {"cautious", c.cohort.counts.cautious},
          {"contrarian", c.cohort.counts.contrarian},
          {"seed", c.cohort.seed},
          {"jitter", c.cohort.jitter},
          {"params", std::move(params)}}},
        {"analysis",
         {{"n_components", c.analysis.n_components},
          {"k", c.analysis.k},
          {"window", c.analysis.window},
          {"seed", c.analysis.seed}}},
        {"paths",
         {{"artifacts", c.paths.artifacts},
          {"logs", c.paths.logs},
          {"output", c.paths.output},
          {"pool", c.paths.pool}}},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".toml") {
        return parse_experiment_config(parse_toml_lite(buf.str()));
    }
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_experiment_config(doc);
}

void apply_environment(ExperimentConfig& config) {
    if (const char* dir = std::getenv("NUDGEXAI_ARTIFACTS"); dir != nullptr && *dir != '\0') {
        config.paths.artifacts = dir;
    }
}

} // namespace nudge
