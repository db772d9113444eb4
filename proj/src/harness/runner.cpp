#include "fedsim/harness/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "fedsim/data/idx.hpp"
#include "fedsim/errors.hpp"

namespace fedsim::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

namespace {

std::string join_ids(const std::vector<std::size_t>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

std::string csv_row(const RoundRecord& r) {
    std::string row = std::to_string(r.round);
    row += ',';
    row += join_ids(r.selected);
    row += ',';
    row += std::to_string(r.uploads_ok);
    for (double v : {r.test_acc, r.test_loss, r.c_time, r.c_qu, r.c_total, r.reward}) {
        row += ',';
        row += format_double(v);
    }
    return row;
}

struct Datasets {
    data::Dataset train;
    data::Dataset test;
};

// Train and test come from one pooled draw so both see the same class
// geometry and the same [0,1] rescale.
Datasets build_synthetic(const DatasetConfig& cfg, std::uint64_t seed) {
    const std::size_t per_class = cfg.samples_per_class + cfg.test_samples_per_class;
    data::Dataset pooled;
    if (!cfg.cache.empty() && fs::exists(cfg.cache)) {
        pooled = data::load_dataset_cache(cfg.cache);
        if (pooled.num_samples != cfg.num_classes * per_class ||
            pooled.feature_dim != cfg.feature_dim) {
            throw ParseError("dataset cache " + cfg.cache + " does not match the config");
        }
    } else {
        pooled = data::generate_synthetic(cfg.num_classes, per_class, cfg.feature_dim,
                                          cfg.class_separation, seed);
        if (!cfg.cache.empty()) data::save_dataset_cache(pooled, cfg.cache);
    }

    Datasets out;
    for (data::Dataset* part : {&out.train, &out.test}) {
        part->feature_dim = pooled.feature_dim;
        part->num_classes = pooled.num_classes;
    }
    // Samples are class-major: the first samples_per_class of each class
    // train, the rest test.
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s) {
            std::size_t row = c * per_class + s;
            data::Dataset& dst = s < cfg.samples_per_class ? out.train : out.test;
            auto sample = pooled.sample(row);
            dst.features.insert(dst.features.end(), sample.begin(), sample.end());
            dst.labels.push_back(pooled.labels[row]);
            ++dst.num_samples;
        }
    }
    return out;
}

Datasets build_datasets(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.dataset.source == DatasetSource::synthetic) {
        return build_synthetic(cfg.dataset, seed);
    }
    Datasets out;
    out.train = data::load_idx(cfg.dataset.images, cfg.dataset.labels);
    out.test = data::load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
    std::size_t classes = std::max(out.train.num_classes, out.test.num_classes);
    out.train.num_classes = out.test.num_classes = classes;
    return out;
}

std::vector<data::ClientDataset> build_partition(const ExperimentConfig& cfg,
                                                 const data::Dataset& train,
                                                 std::uint64_t seed) {
    if (cfg.partition.scheme == data::PartitionScheme::iid) {
        return data::partition_iid(train, cfg.partition.num_clients, seed);
    }
    data::PartitionPlan plan;
    plan.scheme = data::PartitionScheme::noniid_shards;
    plan.num_clients = cfg.partition.num_clients;
    plan.shard_count = cfg.partition.shard_count;
    plan.shard_size = cfg.partition.shard_size;
    plan.shards_per_client = cfg.partition.shards_per_client;
    plan.seed = seed;
    return data::partition_noniid(train, plan);
}

std::unique_ptr<sched::Scheduler> build_scheduler(const ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
    switch (cfg.scheduler.kind) {
        case SchedulerKind::random:
            return std::make_unique<sched::RandomScheduler>(seed);
        case SchedulerKind::cyclic:
            return std::make_unique<sched::CyclicScheduler>(cfg.scheduler.groups);
        case SchedulerKind::prop_fair:
            return std::make_unique<sched::PropFairScheduler>();
        case SchedulerKind::ddpg: {
            drl::DdpgConfig agent = cfg.agent.ddpg;
            agent.num_devices = cfg.partition.num_clients;
            agent.seed = seed;
            auto scheduler = std::make_unique<drl::DdpgScheduler>(agent);
            if (!cfg.agent.checkpoint_in.empty()) {
                scheduler->agent().load(cfg.agent.checkpoint_in);
            }
            return scheduler;
        }
    }
    throw InputError("unknown scheduler kind");
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    ExperimentConfig cfg = config;
    if (options.seed_override) cfg.seed = *options.seed_override;
    if (options.output_override) cfg.output.directory = *options.output_override;
    cfg.fl.num_clients = cfg.partition.num_clients;
    cfg.fl.seed = mix_seed(cfg.seed, 0x666c0001);

    const fs::path run_dir(cfg.output.directory);
    fs::create_directories(run_dir);

    Datasets datasets = build_datasets(cfg, mix_seed(cfg.seed, 0x64617461));
    auto clients = build_partition(cfg, datasets.train, mix_seed(cfg.seed, 0x70617274));

    nn::MlpSpec model;
    model.layer_sizes.push_back(datasets.train.feature_dim);
    model.layer_sizes.insert(model.layer_sizes.end(), cfg.model.hidden.begin(),
                             cfg.model.hidden.end());
    model.layer_sizes.push_back(datasets.train.num_classes);
    model.activation = cfg.model.activation;
    model.output_head = cfg.model.output_head;
    model.validate();

    // Placements: explicit distances win, otherwise uniform [10,100] m.
    std::vector<wireless::DevicePlacement> placements;
    if (cfg.distances.empty()) {
        placements = wireless::default_placements(cfg.partition.num_clients,
                                                  mix_seed(cfg.seed, 0x706c6163));
    } else {
        placements.resize(cfg.partition.num_clients);
        for (std::size_t k = 0; k < placements.size(); ++k) {
            placements[k].device_id = k;
            placements[k].distance = cfg.distances[k];
        }
    }
    for (const auto& [id, dists] : cfg.interferers) {
        placements[id].interferer_distances = dists;
    }

    const std::size_t param_count = nn::layout_size(model.layout());
    Rng compute_rng(mix_seed(cfg.seed, 0x636f6d70));
    std::vector<drl::DeviceProfile> base_profiles(cfg.partition.num_clients);
    for (std::size_t k = 0; k < base_profiles.size(); ++k) {
        auto& p = base_profiles[k];
        p.device_id = k;
        p.data_volume = static_cast<double>(clients[k].size());
        p.compute = compute_rng.uniform(cfg.cost.compute_min, cfg.cost.compute_max);
        p.upload_bits = cfg.cost.upload_bits > 0.0 ? cfg.cost.upload_bits
                                                   : 64.0 * static_cast<double>(param_count);
        p.cycles_per_sample = cfg.cost.cycles_per_sample;
        p.local_loss = 0.0;
        p.uplink_rate = 1.0;  // overwritten every round from the channel
        p.validate();
    }

    auto scheduler =
        build_scheduler(cfg, cfg.scheduler.seed.value_or(mix_seed(cfg.seed, 0x73636865)));
    auto* ddpg = dynamic_cast<drl::DdpgScheduler*>(scheduler.get());

    std::ofstream metrics(run_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) throw ParseError("cannot open for writing: " + (run_dir / "metrics.csv").string());
    metrics << kMetricsHeader << '\n';
    std::ofstream timing(run_dir / "timing.txt", std::ios::trunc);
    std::ofstream episodes_csv;
    const std::size_t episodes = cfg.scheduler.kind == SchedulerKind::ddpg ? cfg.agent.episodes : 1;
    if (episodes > 1) {
        episodes_csv.open(run_dir / "episodes.csv", std::ios::trunc);
        episodes_csv << "episode,rounds,mean_reward,final_accuracy\n";
    }

    RunResult result;
    result.run_dir = run_dir.string();
    int global_round = 0;

    for (std::size_t episode = 0; episode < episodes; ++episode) {
        fed::RunSetup setup;
        setup.model = model;
        setup.fl = cfg.fl;
        setup.rule.kind = cfg.aggregation;
        setup.rule.alpha = cfg.fl.learning_rate;
        setup.train = &datasets.train;
        setup.test = &datasets.test;
        setup.clients = clients;
        setup.profiles = base_profiles;
        setup.bandwidth_hz = cfg.cost.bandwidth_hz;
        setup.workers = options.workers;

        wireless::ChannelConfig channel_cfg = cfg.channel;
        channel_cfg.seed = mix_seed(mix_seed(cfg.seed, 0x6368616e), episode);
        wireless::Channel channel(channel_cfg, placements);

        nn::ParamVector init =
            nn::init_params(model, mix_seed(mix_seed(cfg.seed, 0x696e6974), episode));
        fed::FederatedRun fl_run(std::move(setup), std::move(channel), std::move(init));

        double reward_sum = 0.0;
        int episode_rounds = 0;
        double episode_acc = 0.0;
        while (fl_run.stop_reason() == fed::StopReason::none) {
            auto start = std::chrono::steady_clock::now();
            fed::RoundOutcome outcome = fl_run.run_round(*scheduler);
            double wallclock =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            RoundRecord record;
            record.round = global_round;
            record.selected = outcome.selected;
            record.uploads_ok = outcome.uploaded.size();
            record.test_acc = outcome.test_accuracy;
            record.test_loss = outcome.test_loss;
            record.c_time = outcome.time_cost;
            record.c_qu = outcome.quality_cost;
            record.c_total = outcome.total_cost;
            record.reward = outcome.reward;
            metrics << csv_row(record) << '\n';
            timing << record.round << ' ' << wallclock << '\n';

            reward_sum += outcome.reward;
            episode_acc = outcome.test_accuracy;
            ++episode_rounds;
            if (episode == 0 && result.rounds_to_target < 0 && cfg.fl.target_accuracy > 0.0 &&
                outcome.test_accuracy >= cfg.fl.target_accuracy) {
                result.rounds_to_target = episode_rounds;
            }

            if (cfg.output.checkpoint_every > 0 &&
                static_cast<std::size_t>(episode_rounds) % cfg.output.checkpoint_every == 0) {
                nn::save_params(fl_run.global_params(),
                                (run_dir / ("checkpoint_round_" + std::to_string(global_round) +
                                            ".params"))
                                    .string());
            }

            result.records.push_back(std::move(record));
            ++global_round;
        }

        if (episodes_csv.is_open()) {
            episodes_csv << episode << ',' << episode_rounds << ','
                         << format_double(reward_sum / std::max(episode_rounds, 1)) << ','
                         << format_double(episode_acc) << '\n';
        }
        if (ddpg) ddpg->end_episode();

        result.stop = fl_run.stop_reason();
        result.final_accuracy = episode_acc;
        if (episode + 1 == episodes) {
            nn::save_params(fl_run.global_params(), (run_dir / "final.params").string());
        }
    }
    result.rounds_completed = global_round;

    if (ddpg && !cfg.agent.checkpoint_out.empty()) {
        ddpg->agent().save(cfg.agent.checkpoint_out);
    }

    std::ofstream snapshot(run_dir / "config.snapshot", std::ios::trunc);
    snapshot << options.config_text;

    std::ofstream summary(run_dir / "summary.txt", std::ios::trunc);
    summary << "stop_reason=" << fed::to_string(result.stop) << '\n'
            << "rounds=" << result.rounds_completed << '\n'
            << "final_accuracy=" << format_double(result.final_accuracy) << '\n'
            << "rounds_to_target="
            << (result.rounds_to_target < 0 ? std::string("-")
                                            : std::to_string(result.rounds_to_target))
            << '\n'
            << "seed=" << cfg.seed << '\n';

    return result;
}

RunResult run_file(const std::string& config_path, RunOptions options) {
    options.config_text = read_text_file(config_path);
    ExperimentConfig cfg = parse_config(options.config_text);
    return run(cfg, options);
}

namespace {

void apply_axis(ExperimentConfig& cfg, const std::string& axis, const std::string& value) {
    auto parse_b = [](const std::string& s) -> std::size_t {
        if (s == "inf") return fed::kFullBatch;
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || v < 1) {
            throw InputError("sweep: bad B value '" + s + "'");
        }
        return v;
    };
    if (axis == "C") {
        double v = 0.0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size()) {
            throw InputError("sweep: bad C value '" + value + "'");
        }
        cfg.fl.client_fraction = v;
    } else if (axis == "E") {
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size() || v < 1) {
            throw InputError("sweep: bad E value '" + value + "'");
        }
        cfg.fl.local_epochs = v;
    } else if (axis == "B") {
        cfg.fl.batch_size = parse_b(value);
    } else if (axis == "EB") {
        auto colon = value.find(':');
        if (colon == std::string::npos) {
            throw InputError("sweep: EB values look like E:B, got '" + value + "'");
        }
        std::string e_str = value.substr(0, colon);
        std::size_t e = 0;
        auto [p, ec] = std::from_chars(e_str.data(), e_str.data() + e_str.size(), e);
        if (ec != std::errc() || p != e_str.data() + e_str.size() || e < 1) {
            throw InputError("sweep: bad E in '" + value + "'");
        }
        cfg.fl.local_epochs = e;
        cfg.fl.batch_size = parse_b(value.substr(colon + 1));
    } else {
        throw InputError("sweep: unknown axis '" + axis + "' (expected C, E, B or EB)");
    }
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
    }
    return out;
}

}  // namespace

SweepResult sweep(const ExperimentConfig& base, const std::string& axis,
                  const std::vector<std::string>& values, double target_accuracy,
                  const RunOptions& options) {
    if (values.empty()) throw InputError("sweep: no axis values");
    if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
        // An unreachable target like 1.01 is still a valid sweep; only
        // nonpositive targets are rejected.
        if (!(target_accuracy > 0.0)) throw InputError("sweep: target accuracy must be > 0");
    }

    ExperimentConfig root = base;
    if (options.seed_override) root.seed = *options.seed_override;
    const fs::path sweep_dir(options.output_override.value_or(root.output.directory));
    fs::create_directories(sweep_dir);

    SweepResult result;
    for (const auto& value : values) {
        ExperimentConfig cfg = root;
        apply_axis(cfg, axis, value);
        cfg.fl.target_accuracy = std::min(target_accuracy, 1.0);
        // A target beyond 1.0 can never fire; keep it unreachable.
        if (target_accuracy > 1.0) cfg.fl.target_accuracy = 0.0;
        cfg.output.directory = (sweep_dir / (sanitize(axis) + "_" + sanitize(value))).string();

        RunOptions run_opts;
        run_opts.workers = options.workers;
        run_opts.config_text = options.config_text;
        RunResult one = run(cfg, run_opts);

        SweepRow row;
        row.value = value;
        row.rounds_to_target = one.rounds_to_target;
        row.final_accuracy = one.final_accuracy;
        row.run_dir = one.run_dir;
        result.rows.push_back(std::move(row));
    }

    const fs::path summary_path = sweep_dir / "summary.csv";
    std::ofstream summary(summary_path, std::ios::trunc);
    if (!summary) throw ParseError("cannot open for writing: " + summary_path.string());
    summary << "value,rounds_to_target,final_accuracy\n";
    for (const auto& row : result.rows) {
        summary << row.value << ','
                << (row.rounds_to_target < 0 ? std::string("-")
                                             : std::to_string(row.rounds_to_target))
                << ',' << format_double(row.final_accuracy) << '\n';
    }
    result.summary_path = summary_path.string();
    return result;
}

void emit_plot_series(const std::string& run_dir) {
    const fs::path metrics_path = fs::path(run_dir) / "metrics.csv";
    std::ifstream in(metrics_path);
    if (!in) throw ParseError("cannot open: " + metrics_path.string());

    std::ofstream acc(fs::path(run_dir) / "accuracy.dat", std::ios::trunc);
    std::ofstream loss(fs::path(run_dir) / "loss.dat", std::ios::trunc);

    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        // Fields are copied as strings so the series match the CSV exactly.
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (fields.size() < 5) throw ParseError("malformed metrics row in " + metrics_path.string());
        acc << fields[0] << ' ' << fields[3] << '\n';
        loss << fields[0] << ' ' << fields[4] << '\n';
    }
}

}  // namespace fedsim::harness
