#include "desync/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace desync {

namespace {

const std::set<std::string> known_keys = {
    "mode",        "n",          "channel_counts",   "alpha",        "beta",
    "gamma",       "epsilon",    "trials",           "seed_base",    "workers",
    "max_rounds",  "paired",     "output_dir",       "staleness",    "sync_rule",
    "period_T",    "loss_probability", "hidden_nodes", "hidden_ignored", "nesterov"};

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    if (!node.IsScalar())
        throw SpecError(key + ": expected a scalar");
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw SpecError(key + ": malformed value '" + node.Scalar() + "'");
    }
}

template <class T>
std::vector<T> list(const YAML::Node& node, const std::string& key)
{
    std::vector<T> out;
    if (node.IsScalar()) {
        out.push_back(scalar<T>(node, key));
    } else if (node.IsSequence()) {
        for (const auto& item : node)
            out.push_back(scalar<T>(item, key));
    } else {
        throw SpecError(key + ": expected a number or a list");
    }
    return out;
}

std::vector<std::vector<std::size_t>> nested_counts(const YAML::Node& node)
{
    const std::string key = "channel_counts";
    if (!node.IsSequence() || node.size() == 0)
        throw SpecError(key + ": expected a non-empty list");
    std::vector<std::vector<std::size_t>> out;
    if (node[0].IsSequence()) {
        for (const auto& item : node)
            out.push_back(list<std::size_t>(item, key));
    } else {
        out.push_back(list<std::size_t>(node, key));
    }
    return out;
}

StalenessMode staleness_from(const std::string& text)
{
    if (text == "live")
        return StalenessMode::live;
    if (text == "assumption1")
        return StalenessMode::assumption1;
    throw SpecError("staleness: expected live or assumption1, got '" + text + "'");
}

SyncRule sync_rule_from(const std::string& text)
{
    if (text == "anchored")
        return SyncRule::anchored;
    if (text == "offset_consensus")
        return SyncRule::offset_consensus;
    if (text == "inhibitory")
        return SyncRule::inhibitory;
    throw SpecError("sync_rule: expected anchored, offset_consensus or inhibitory, got '" + text + "'");
}

bool multichannel(Mode mode) { return mode == Mode::much || mode == Mode::fast_much; }

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw SpecError(message);
}

}  // namespace

std::string to_string(SyncRule rule)
{
    switch (rule) {
    case SyncRule::anchored:
        return "anchored";
    case SyncRule::offset_consensus:
        return "offset_consensus";
    case SyncRule::inhibitory:
        return "inhibitory";
    }
    return "anchored";
}

std::string to_string(Mode mode)
{
    switch (mode) {
    case Mode::desync: return "desync";
    case Mode::fast_desync: return "fast-desync";
    case Mode::much: return "much";
    case Mode::fast_much: return "fast-much";
    case Mode::event_sim: return "event-sim";
    }
    return "desync";
}

Mode mode_from_string(const std::string& text)
{
    for (Mode m : {Mode::desync, Mode::fast_desync, Mode::much, Mode::fast_much, Mode::event_sim})
        if (to_string(m) == text)
            return m;
    throw SpecError("mode: unknown mode '" + text + "'");
}

std::vector<double> default_alpha_grid()
{
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k)
        grid.push_back(k / 20.0);
    return grid;
}

std::vector<double> ExperimentSpec::beta_grid() const
{
    if (!beta.empty())
        return beta;
    std::vector<double> out;
    for (double a : alpha)
        out.push_back(alpha_to_beta(a));
    return out;
}

void validate(const ExperimentSpec& spec)
{
    require(spec.trials >= 1, "trials must be >= 1");
    require(spec.workers >= 1, "workers must be >= 1");
    require(!spec.epsilon.empty(), "epsilon: grid must be non-empty");
    for (double e : spec.epsilon)
        require(e > 0.0, "epsilon must be positive");
    require(!spec.alpha.empty() || !spec.beta.empty(), "alpha: grid must be non-empty");
    require(spec.alpha.empty() || spec.beta.empty(), "beta: give either alpha or beta, not both");
    for (double a : spec.alpha)
        require(a > 0.0 && a < 1.0, "alpha out of (0,1)");
    for (double b : spec.beta)
        require(b > 0.0 && b < 0.5, "beta out of (0,1/2)");
    if (spec.max_rounds)
        require(*spec.max_rounds >= 1, "max_rounds must be >= 1");

    if (multichannel(spec.mode)) {
        require(!spec.channel_counts.empty(), "channel_counts: required for " +
                                                  to_string(spec.mode));
        require(!spec.gamma.empty(), "gamma: grid must be non-empty");
        for (const auto& counts : spec.channel_counts) {
            require(counts.size() >= 2, "channel_counts: need at least 2 channels");
            for (std::size_t n : counts)
                require(n >= 2, "channel_counts: each channel needs >= 2 nodes");
        }
    } else if (spec.mode == Mode::event_sim) {
        require(!spec.n.empty() || !spec.channel_counts.empty(),
                "n: event-sim needs n or channel_counts");
        require(spec.beta.empty(), "beta: event-sim takes alpha");
        for (std::size_t n : spec.n)
            require(n >= 1, "n must be >= 1");
        for (const auto& counts : spec.channel_counts) {
            require(!counts.empty(), "channel_counts: empty channel list");
            for (std::size_t n : counts)
                require(n >= 1, "channel_counts: each channel needs >= 1 node");
        }
        require(spec.period_T > 0.0, "period_T must be positive");
        require(spec.loss_probability >= 0.0 && spec.loss_probability < 1.0,
                "loss_probability out of [0,1)");
    } else {
        require(!spec.n.empty(), "n: grid must be non-empty");
        require(spec.beta.empty(), "beta: single-channel modes take alpha");
        for (std::size_t n : spec.n)
            require(n >= 2, "n must be >= 2");
    }
    for (double g : spec.gamma)
        require(g > 0.0 && g < 1.0, "gamma out of (0,1)");
}

ExperimentSpec parse_spec(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw SpecError(std::string("malformed config: ") + e.what());
    }
    if (!root.IsMap())
        throw SpecError("config must be a mapping");

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!known_keys.count(key))
            throw SpecError("unknown key '" + key + "'");
    }
    if (!root["mode"])
        throw SpecError("mode: required");

    ExperimentSpec spec;
    spec.mode = mode_from_string(scalar<std::string>(root["mode"], "mode"));
    if (auto v = root["n"])
        spec.n = list<std::size_t>(v, "n");
    if (auto v = root["channel_counts"])
        spec.channel_counts = nested_counts(v);
    if (auto v = root["alpha"])
        spec.alpha = list<double>(v, "alpha");
    if (auto v = root["beta"])
        spec.beta = list<double>(v, "beta");
    if (auto v = root["gamma"])
        spec.gamma = list<double>(v, "gamma");
    if (auto v = root["epsilon"])
        spec.epsilon = list<double>(v, "epsilon");
    if (auto v = root["trials"])
        spec.trials = scalar<std::size_t>(v, "trials");
    if (auto v = root["seed_base"])
        spec.seed_base = scalar<std::uint64_t>(v, "seed_base");
    if (auto v = root["workers"])
        spec.workers = scalar<std::size_t>(v, "workers");
    if (auto v = root["max_rounds"])
        spec.max_rounds = scalar<std::size_t>(v, "max_rounds");
    if (auto v = root["paired"])
        spec.paired = scalar<bool>(v, "paired");
    if (auto v = root["output_dir"])
        spec.output_dir = scalar<std::string>(v, "output_dir");
    if (auto v = root["staleness"])
        spec.staleness = staleness_from(scalar<std::string>(v, "staleness"));
    if (auto v = root["sync_rule"])
        spec.sync_rule = sync_rule_from(scalar<std::string>(v, "sync_rule"));
    if (auto v = root["period_T"])
        spec.period_T = scalar<double>(v, "period_T");
    if (auto v = root["loss_probability"])
        spec.loss_probability = scalar<double>(v, "loss_probability");
    if (auto v = root["hidden_nodes"])
        spec.hidden_nodes = scalar<std::size_t>(v, "hidden_nodes");
    if (auto v = root["hidden_ignored"])
        spec.hidden_ignored = scalar<std::size_t>(v, "hidden_ignored");
    if (auto v = root["nesterov"])
        spec.nesterov = scalar<bool>(v, "nesterov");

    if (spec.alpha.empty() && spec.beta.empty())
        spec.alpha = default_alpha_grid();
    if (spec.epsilon.empty())
        spec.epsilon = {1e-3, 1e-4};
    if (multichannel(spec.mode)) {
        if (spec.channel_counts.empty())
            spec.channel_counts = {std::vector<std::size_t>(6, 4),
                                   std::vector<std::size_t>(16, 4)};
    } else if (spec.mode != Mode::event_sim && spec.n.empty()) {
        spec.n = {4, 8};
    }
    if (spec.gamma.empty() && spec.mode != Mode::desync && spec.mode != Mode::fast_desync)
        spec.gamma = {0.6};

    validate(spec);
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw SpecError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str());
}

std::string serialize_spec(const ExperimentSpec& spec)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << to_string(spec.mode);
    if (!spec.n.empty())
        out << YAML::Key << "n" << YAML::Value << YAML::Flow << spec.n;
    if (!spec.channel_counts.empty()) {
        out << YAML::Key << "channel_counts" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& counts : spec.channel_counts)
            out << YAML::Flow << counts;
        out << YAML::EndSeq;
    }
    if (!spec.alpha.empty())
        out << YAML::Key << "alpha" << YAML::Value << YAML::Flow << spec.alpha;
    if (!spec.beta.empty())
        out << YAML::Key << "beta" << YAML::Value << YAML::Flow << spec.beta;
    if (!spec.gamma.empty())
        out << YAML::Key << "gamma" << YAML::Value << YAML::Flow << spec.gamma;
    out << YAML::Key << "epsilon" << YAML::Value << YAML::Flow << spec.epsilon;
    out << YAML::Key << "trials" << YAML::Value << spec.trials;
    out << YAML::Key << "seed_base" << YAML::Value << spec.seed_base;
    out << YAML::Key << "workers" << YAML::Value << spec.workers;
    if (spec.max_rounds)
        out << YAML::Key << "max_rounds" << YAML::Value << *spec.max_rounds;
    out << YAML::Key << "paired" << YAML::Value << spec.paired;
    out << YAML::Key << "output_dir" << YAML::Value << spec.output_dir;
    if (spec.mode == Mode::event_sim) {
        out << YAML::Key << "staleness" << YAML::Value
            << (spec.staleness == StalenessMode::live ? "live" : "assumption1");
        out << YAML::Key << "sync_rule" << YAML::Value
            << to_string(spec.sync_rule);
        out << YAML::Key << "period_T" << YAML::Value << spec.period_T;
        out << YAML::Key << "loss_probability" << YAML::Value << spec.loss_probability;
        out << YAML::Key << "hidden_nodes" << YAML::Value << spec.hidden_nodes;
        out << YAML::Key << "hidden_ignored" << YAML::Value << spec.hidden_ignored;
        out << YAML::Key << "nesterov" << YAML::Value << spec.nesterov;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

PhaseVector random_start(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v)
        x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] <= v[i - 1])
            v[i] = v[i - 1] + 1e-12;
    return PhaseVector(std::move(v));
}

PhaseSet random_multichannel_start(const std::vector<std::size_t>& counts, std::uint64_t seed)
{
    PhaseSet out;
    for (std::size_t c = 0; c < counts.size(); ++c)
        out.push_back(random_start(counts[c], seed * 1000003ULL + c));
    return out;
}

}  // namespace desync
