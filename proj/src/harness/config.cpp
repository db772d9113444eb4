#include "fedsim/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fedsim/errors.hpp"

namespace fedsim::harness {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct RawValue {
    std::string value;
    int line = 0;
};

using RawSection = std::map<std::string, RawValue>;
using RawConfig = std::map<std::string, RawSection>;

RawConfig tokenize(const std::string& text, std::vector<std::string>& violations) {
    RawConfig out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                violations.push_back("line " + std::to_string(line_no) +
                                     ": malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            violations.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            violations.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        if (section.empty()) {
            violations.push_back("line " + std::to_string(line_no) +
                                 ": key outside any [section]");
            continue;
        }
        auto [it, inserted] = out[section].emplace(key, RawValue{value, line_no});
        if (!inserted) {
            violations.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key +
                                 "' in [" + section + "]");
        }
    }
    return out;
}

// Pulls typed values out of one section, recording violations and flagging
// every consumed key so leftovers can be reported as unknown.
class SectionReader {
public:
    SectionReader(const std::string& name, RawSection* section,
                  std::vector<std::string>& violations)
        : name_(name), section_(section), violations_(violations) {}

    bool present(const std::string& key) const {
        return section_ && section_->count(key) > 0;
    }

    std::optional<std::string> take_string(const std::string& key) {
        if (!section_) return std::nullopt;
        auto it = section_->find(key);
        if (it == section_->end()) return std::nullopt;
        used_.push_back(key);
        return it->second.value;
    }

    void read_double(const std::string& key, double& out) {
        auto raw = take_string(key);
        if (!raw) return;
        if (auto v = parse_double(*raw)) out = *v;
        else bad_value(key, *raw);
    }

    void read_size(const std::string& key, std::size_t& out) {
        auto raw = take_string(key);
        if (!raw) return;
        if (auto v = parse_size(*raw)) out = *v;
        else bad_value(key, *raw);
    }

    void read_u64(const std::string& key, std::uint64_t& out) {
        auto raw = take_string(key);
        if (!raw) return;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
        if (ec == std::errc() && p == raw->data() + raw->size()) out = v;
        else bad_value(key, *raw);
    }

    // Positive integer or the literal "inf".
    void read_batch(const std::string& key, std::size_t& out) {
        auto raw = take_string(key);
        if (!raw) return;
        if (*raw == "inf") {
            out = fed::kFullBatch;
            return;
        }
        if (auto v = parse_size(*raw); v && *v >= 1) out = *v;
        else bad_value(key, *raw);
    }

    void read_size_list(const std::string& key, std::vector<std::size_t>& out) {
        auto raw = take_string(key);
        if (!raw) return;
        std::vector<std::size_t> parsed;
        if (split(*raw, [&](const std::string& tok) {
                auto v = parse_size(tok);
                if (v) parsed.push_back(*v);
                return v.has_value();
            })) {
            out = std::move(parsed);
        } else {
            bad_value(key, *raw);
        }
    }

    void read_double_list(const std::string& key, std::vector<double>& out) {
        auto raw = take_string(key);
        if (!raw) return;
        std::vector<double> parsed;
        if (split(*raw, [&](const std::string& tok) {
                auto v = parse_double(tok);
                if (v) parsed.push_back(*v);
                return v.has_value();
            })) {
            out = std::move(parsed);
        } else {
            bad_value(key, *raw);
        }
    }

    template <typename T>
    void read_enum(const std::string& key, T& out,
                   std::initializer_list<std::pair<const char*, T>> table) {
        auto raw = take_string(key);
        if (!raw) return;
        for (const auto& [label, v] : table) {
            if (*raw == label) {
                out = v;
                return;
            }
        }
        std::string allowed;
        for (const auto& [label, v] : table) {
            if (!allowed.empty()) allowed += "|";
            allowed += label;
        }
        violations_.push_back("[" + name_ + "] " + key + ": '" + *raw + "' not one of " + allowed);
    }

    void violation(const std::string& message) {
        violations_.push_back("[" + name_ + "] " + message);
    }

    // Reports every key not consumed by a read_* call.
    void finish(const std::function<bool(const std::string&)>& extra_ok = {}) {
        if (!section_) return;
        for (const auto& [key, raw] : *section_) {
            if (std::find(used_.begin(), used_.end(), key) != used_.end()) continue;
            if (extra_ok && extra_ok(key)) continue;
            violations_.push_back("[" + name_ + "] unknown key '" + key + "' (line " +
                                  std::to_string(raw.line) + ")");
        }
    }

    RawSection* raw() { return section_; }

private:
    static std::optional<double> parse_double(const std::string& s) {
        if (s.empty()) return std::nullopt;
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
        return v;
    }

    static std::optional<std::size_t> parse_size(const std::string& s) {
        if (s.empty()) return std::nullopt;
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
        return v;
    }

    static bool split(const std::string& s, const std::function<bool(const std::string&)>& each) {
        if (trim(s).empty()) return true;  // empty list
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!each(trim(tok))) return false;
        }
        return true;
    }

    void bad_value(const std::string& key, const std::string& raw) {
        violations_.push_back("[" + name_ + "] " + key + ": cannot parse '" + raw + "'");
    }

    std::string name_;
    RawSection* section_;
    std::vector<std::string>& violations_;
    std::vector<std::string> used_;
};

RawSection* find_section(RawConfig& raw, const std::string& name) {
    auto it = raw.find(name);
    return it == raw.end() ? nullptr : &it->second;
}

std::vector<std::string> parse_into(const std::string& text, ExperimentConfig& cfg) {
    std::vector<std::string> violations;
    RawConfig raw = tokenize(text, violations);

    static const char* known_sections[] = {"experiment", "dataset", "partition", "model",
                                           "fl",         "channel", "cost",      "scheduler",
                                           "agent",      "output"};
    for (const auto& [name, _] : raw) {
        if (std::find_if(std::begin(known_sections), std::end(known_sections),
                         [&](const char* s) { return name == s; }) == std::end(known_sections)) {
            violations.push_back("unknown section [" + name + "]");
        }
    }

    {
        SectionReader r("experiment", find_section(raw, "experiment"), violations);
        r.read_u64("seed", cfg.seed);
        r.finish();
    }
    {
        SectionReader r("dataset", find_section(raw, "dataset"), violations);
        r.read_enum("source", cfg.dataset.source,
                    {{"synthetic", DatasetSource::synthetic}, {"idx", DatasetSource::idx}});
        r.read_size("num_classes", cfg.dataset.num_classes);
        r.read_size("samples_per_class", cfg.dataset.samples_per_class);
        r.read_size("test_samples_per_class", cfg.dataset.test_samples_per_class);
        r.read_size("feature_dim", cfg.dataset.feature_dim);
        r.read_double("class_separation", cfg.dataset.class_separation);
        if (auto v = r.take_string("cache")) cfg.dataset.cache = *v;
        if (auto v = r.take_string("images")) cfg.dataset.images = *v;
        if (auto v = r.take_string("labels")) cfg.dataset.labels = *v;
        if (auto v = r.take_string("test_images")) cfg.dataset.test_images = *v;
        if (auto v = r.take_string("test_labels")) cfg.dataset.test_labels = *v;
        r.finish();

        if (cfg.dataset.source == DatasetSource::synthetic) {
            if (cfg.dataset.num_classes < 1 || cfg.dataset.samples_per_class < 1 ||
                cfg.dataset.feature_dim < 1) {
                violations.push_back("[dataset] synthetic counts must be >= 1");
            }
            if (!(cfg.dataset.class_separation > 0.0)) {
                violations.push_back("[dataset] class_separation must be > 0");
            }
            if (cfg.dataset.test_samples_per_class < 1) {
                violations.push_back("[dataset] test_samples_per_class must be >= 1");
            }
        } else {
            for (const auto& [label, path] :
                 {std::pair{"images", cfg.dataset.images}, {"labels", cfg.dataset.labels},
                  {"test_images", cfg.dataset.test_images},
                  {"test_labels", cfg.dataset.test_labels}}) {
                if (path.empty()) {
                    violations.push_back(std::string("[dataset] idx source requires ") + label);
                }
            }
        }
    }
    {
        SectionReader r("partition", find_section(raw, "partition"), violations);
        r.read_enum("scheme", cfg.partition.scheme,
                    {{"iid", data::PartitionScheme::iid},
                     {"noniid_shards", data::PartitionScheme::noniid_shards}});
        r.read_size("num_clients", cfg.partition.num_clients);
        r.read_size("shard_count", cfg.partition.shard_count);
        r.read_size("shard_size", cfg.partition.shard_size);
        r.read_size("shards_per_client", cfg.partition.shards_per_client);
        r.finish();

        if (cfg.partition.num_clients < 1) {
            violations.push_back("[partition] num_clients must be >= 1");
        }
        if (cfg.partition.scheme == data::PartitionScheme::noniid_shards) {
            const auto& p = cfg.partition;
            if (p.shard_count < 1 || p.shard_size < 1 || p.shards_per_client < 1) {
                violations.push_back("[partition] noniid_shards needs shard_count, shard_size "
                                     "and shards_per_client >= 1");
            } else if (p.shards_per_client * p.num_clients != p.shard_count) {
                violations.push_back("[partition] shards_per_client x num_clients != shard_count");
            }
            if (cfg.dataset.source == DatasetSource::synthetic &&
                p.shard_count * p.shard_size >
                    cfg.dataset.num_classes * cfg.dataset.samples_per_class) {
                violations.push_back("[partition] shard_count x shard_size exceeds dataset size");
            }
        }
    }
    {
        SectionReader r("model", find_section(raw, "model"), violations);
        r.read_size_list("hidden", cfg.model.hidden);
        r.read_enum("activation", cfg.model.activation,
                    {{"relu", nn::Activation::relu},
                     {"sigmoid", nn::Activation::sigmoid},
                     {"tanh", nn::Activation::tanh},
                     {"identity", nn::Activation::identity}});
        r.read_enum("output_head", cfg.model.output_head,
                    {{"softmax_xent", nn::OutputHead::softmax_xent},
                     {"linear", nn::OutputHead::linear}});
        r.finish();
        for (std::size_t h : cfg.model.hidden) {
            if (h < 1) violations.push_back("[model] hidden layer sizes must be >= 1");
        }
    }
    {
        SectionReader r("fl", find_section(raw, "fl"), violations);
        r.read_double("client_fraction", cfg.fl.client_fraction);
        r.read_batch("batch_size", cfg.fl.batch_size);
        r.read_size("local_epochs", cfg.fl.local_epochs);
        r.read_double("learning_rate", cfg.fl.learning_rate);
        r.read_size("max_rounds", cfg.fl.max_rounds);
        r.read_double("target_accuracy", cfg.fl.target_accuracy);
        r.read_enum("aggregation", cfg.aggregation,
                    {{"weighted_average", fed::AggregationKind::weighted_average},
                     {"gradient_step", fed::AggregationKind::gradient_step}});
        r.finish();

        if (!(cfg.fl.client_fraction >= 0.0 && cfg.fl.client_fraction <= 1.0)) {
            violations.push_back("[fl] C out of [0,1]");
        }
        if (cfg.fl.local_epochs < 1) violations.push_back("[fl] local_epochs must be >= 1");
        if (!(cfg.fl.learning_rate > 0.0)) violations.push_back("[fl] learning_rate must be > 0");
        if (cfg.fl.max_rounds < 1) violations.push_back("[fl] max_rounds must be >= 1");
        if (cfg.fl.target_accuracy != 0.0 &&
            !(cfg.fl.target_accuracy > 0.0 && cfg.fl.target_accuracy <= 1.0)) {
            violations.push_back("[fl] target_accuracy must be 0 (off) or in (0,1]");
        }
    }
    {
        SectionReader r("channel", find_section(raw, "channel"), violations);
        r.read_double("transmit_power", cfg.channel.transmit_power);
        r.read_double("path_loss_exponent", cfg.channel.path_loss_exponent);
        r.read_double("noise_variance", cfg.channel.noise_variance);
        r.read_enum("fading", cfg.channel.fading,
                    {{"none", wireless::Fading::none}, {"rayleigh", wireless::Fading::rayleigh}});
        r.read_size("subchannels", cfg.channel.subchannels);
        r.read_double("snr_threshold", cfg.channel.snr_threshold);
        r.read_double_list("distances", cfg.distances);

        if (RawSection* sec = r.raw()) {
            for (const auto& [key, value] : *sec) {
                if (!key.starts_with("interferers_")) continue;
                std::string id_str = key.substr(std::string("interferers_").size());
                std::size_t id = 0;
                auto [p, ec] = std::from_chars(id_str.data(), id_str.data() + id_str.size(), id);
                if (ec != std::errc() || p != id_str.data() + id_str.size()) {
                    violations.push_back("[channel] bad device id in '" + key + "'");
                    continue;
                }
                std::vector<double> dists;
                SectionReader tmp("channel", sec, violations);
                tmp.read_double_list(key, dists);
                cfg.interferers[id] = std::move(dists);
            }
        }
        r.finish([](const std::string& key) { return key.starts_with("interferers_"); });

        try {
            cfg.channel.validate();
        } catch (const InputError& e) {
            violations.push_back(std::string("[channel] ") + e.what());
        }
        if (!cfg.distances.empty() && cfg.distances.size() != cfg.partition.num_clients) {
            violations.push_back("[channel] distances list length != num_clients");
        }
        for (double d : cfg.distances) {
            if (!(d > 0.0)) violations.push_back("[channel] distances must be > 0");
        }
        for (const auto& [id, dists] : cfg.interferers) {
            if (id >= cfg.partition.num_clients) {
                violations.push_back("[channel] interferers_" + std::to_string(id) +
                                     ": device id out of range");
            }
            for (double d : dists) {
                if (!(d > 0.0)) {
                    violations.push_back("[channel] interferer distances must be > 0");
                }
            }
        }
    }
    {
        SectionReader r("cost", find_section(raw, "cost"), violations);
        r.read_double("cycles_per_sample", cfg.cost.cycles_per_sample);
        r.read_double("compute_min", cfg.cost.compute_min);
        r.read_double("compute_max", cfg.cost.compute_max);
        r.read_double("bandwidth_hz", cfg.cost.bandwidth_hz);
        r.read_double("upload_bits", cfg.cost.upload_bits);
        r.finish();

        if (!(cfg.cost.cycles_per_sample > 0.0)) {
            violations.push_back("[cost] cycles_per_sample must be > 0");
        }
        if (!(cfg.cost.compute_min > 0.0) || cfg.cost.compute_max < cfg.cost.compute_min) {
            violations.push_back("[cost] need 0 < compute_min <= compute_max");
        }
        if (!(cfg.cost.bandwidth_hz > 0.0)) violations.push_back("[cost] bandwidth_hz must be > 0");
        if (cfg.cost.upload_bits < 0.0) violations.push_back("[cost] upload_bits must be >= 0");
    }
    {
        SectionReader r("scheduler", find_section(raw, "scheduler"), violations);
        r.read_enum("kind", cfg.scheduler.kind,
                    {{"random", SchedulerKind::random},
                     {"cyclic", SchedulerKind::cyclic},
                     {"prop_fair", SchedulerKind::prop_fair},
                     {"ddpg", SchedulerKind::ddpg}});
        r.read_size("groups", cfg.scheduler.groups);
        if (r.present("seed")) {
            std::uint64_t s = 0;
            r.read_u64("seed", s);
            cfg.scheduler.seed = s;
        }
        r.finish();

        if (cfg.scheduler.kind == SchedulerKind::cyclic &&
            (cfg.scheduler.groups < 1 || cfg.scheduler.groups > cfg.partition.num_clients)) {
            violations.push_back("[scheduler] cyclic needs 1 <= groups <= num_clients");
        }
    }
    {
        SectionReader r("agent", find_section(raw, "agent"), violations);
        r.read_size_list("hidden", cfg.agent.ddpg.hidden);
        r.read_double("discount", cfg.agent.ddpg.discount);
        r.read_double("soft_update_tau", cfg.agent.ddpg.soft_update_tau);
        r.read_double("actor_lr", cfg.agent.ddpg.actor_lr);
        r.read_double("critic_lr", cfg.agent.ddpg.critic_lr);
        r.read_double("noise_scale", cfg.agent.ddpg.noise_scale);
        r.read_double("noise_decay", cfg.agent.ddpg.noise_decay);
        r.read_size("replay_capacity", cfg.agent.ddpg.replay_capacity);
        r.read_size("batch_size", cfg.agent.ddpg.batch_size);
        r.read_size("episodes", cfg.agent.episodes);
        if (auto v = r.take_string("checkpoint_in")) cfg.agent.checkpoint_in = *v;
        if (auto v = r.take_string("checkpoint_out")) cfg.agent.checkpoint_out = *v;
        r.finish();

        drl::DdpgConfig probe = cfg.agent.ddpg;
        probe.num_devices = std::max<std::size_t>(cfg.partition.num_clients, 1);
        try {
            probe.validate();
        } catch (const InputError& e) {
            violations.push_back(std::string("[agent] ") + e.what());
        }
        if (cfg.agent.episodes < 1) violations.push_back("[agent] episodes must be >= 1");
    }
    {
        SectionReader r("output", find_section(raw, "output"), violations);
        if (auto v = r.take_string("directory")) cfg.output.directory = *v;
        r.read_size("checkpoint_every", cfg.output.checkpoint_every);
        r.finish();
        if (cfg.output.directory.empty()) {
            violations.push_back("[output] directory must not be empty");
        }
    }

    return violations;
}

}  // namespace

std::vector<std::string> validate(const std::string& config_text) {
    ExperimentConfig scratch;
    return parse_into(config_text, scratch);
}

ExperimentConfig parse_config(const std::string& config_text) {
    ExperimentConfig cfg;
    auto violations = parse_into(config_text, cfg);
    if (!violations.empty()) {
        std::string message = "invalid config:";
        for (const auto& v : violations) message += "\n  " + v;
        throw ParseError(message);
    }
    return cfg;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

}  // namespace fedsim::harness
