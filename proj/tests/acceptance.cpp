// Acceptance suite: end-to-end checks of the simulator against its
// contract, one printed pass/fail line per criterion. Exits nonzero if any
// criterion fails. The optional MNIST leg of criterion 7 runs when
// FEDSIM_MNIST_DIR points at the four IDX files.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "fedsim/data/dataset.hpp"
#include "fedsim/fed/core.hpp"
#include "fedsim/harness/runner.hpp"
#include "fedsim/nn/mlp.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sched/scheduler.hpp"
#include "fedsim/wireless/channel.hpp"
#include "toy_env.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path g_workdir;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_correctness() {
    Rng rng(0xACCE0001);
    const nn::Activation acts[] = {nn::Activation::relu, nn::Activation::sigmoid,
                                   nn::Activation::tanh, nn::Activation::identity};
    int instances = 0;
    double worst = 0.0;
    while (instances < 100) {
        nn::MlpSpec spec;
        spec.layer_sizes = {1 + rng.uniform_index(3), 1 + rng.uniform_index(4),
                            1 + rng.uniform_index(3)};
        spec.activation = acts[rng.uniform_index(4)];
        spec.output_head =
            rng.uniform_index(2) == 0 ? nn::OutputHead::softmax_xent : nn::OutputHead::linear;
        if (nn::layout_size(spec.layout()) > 50) continue;
        auto params = nn::init_params(spec, rng.next_u64());

        const std::size_t in_dim = spec.input_dim();
        const std::size_t out_dim = spec.output_dim();
        const std::size_t count = 1 + rng.uniform_index(4);
        std::vector<double> features(count * in_dim);
        std::vector<int> labels(count);
        std::vector<double> targets(count * out_dim);
        for (auto& v : features) v = rng.uniform(-1.0, 1.0);
        for (auto& l : labels) l = static_cast<int>(rng.uniform_index(out_dim));
        for (auto& t : targets) t = rng.uniform(-1.0, 1.0);
        nn::Batch batch{count, in_dim, features, labels, targets};

        auto got = nn::backward(spec, params, batch);

        auto loss_at = [&](const nn::ParamVector& p) {
            double sum = 0.0;
            for (std::size_t s = 0; s < count; ++s) {
                auto out = nn::forward(spec, p, batch.features.subspan(s * in_dim, in_dim));
                sum += nn::head_loss(spec, out, batch, s);
            }
            return sum / static_cast<double>(count);
        };

        const double eps = 1e-5;
        nn::ParamVector probe = params;
        for (std::size_t i = 0; i < params.values.size(); ++i) {
            probe.values[i] = params.values[i] + eps;
            double up = loss_at(probe);
            probe.values[i] = params.values[i] - eps;
            double down = loss_at(probe);
            probe.values[i] = params.values[i];
            double fd = (up - down) / (2.0 * eps);
            double g = got.grad.values[i];
            double err = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-4});
            worst = std::max(worst, err);
            if (err >= 1e-4) {
                return {false, "component error " + std::to_string(err) + " at instance " +
                                   std::to_string(instances)};
            }
        }
        ++instances;
    }
    return {true, "100 instances, worst relative error " + harness::format_double(worst)};
}

// ---------------------------------------------------------------- criterion 2

Outcome fedsgd_equivalence() {
    Rng rng(0xACCE0002);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        nn::MlpSpec spec;
        spec.layer_sizes = {2 + rng.uniform_index(3), 2 + rng.uniform_index(4),
                            2 + rng.uniform_index(3)};
        spec.activation = nn::Activation::tanh;
        spec.output_head = nn::OutputHead::softmax_xent;
        auto global = nn::init_params(spec, rng.next_u64());

        data::Dataset ds = data::generate_synthetic(spec.output_dim(), 24,
                                                    spec.input_dim(), 2.0, rng.next_u64());
        auto clients = data::partition_iid(ds, 4, rng.next_u64());
        // unequal sample weights: drop a few indices from two clients
        clients[1].indices.resize(clients[1].indices.size() - 3);
        clients[3].indices.resize(clients[3].indices.size() - 7);

        const double alpha = rng.uniform(0.01, 0.3);
        std::vector<fed::ClientUpdateResult> results;
        for (const auto& c : clients) {
            results.push_back(fed::client_update(spec, global, ds, c, 1, fed::kFullBatch, alpha,
                                                 rng.next_u64()));
        }
        auto averaged =
            fed::aggregate({fed::AggregationKind::weighted_average, 0.0}, global, results);
        auto stepped =
            fed::aggregate({fed::AggregationKind::gradient_step, alpha}, global, results);
        for (std::size_t i = 0; i < averaged.values.size(); ++i) {
            double diff = std::abs(averaged.values[i] - stepped.values[i]);
            worst = std::max(worst, diff);
            if (diff >= 1e-9) {
                return {false, "element difference " + harness::format_double(diff)};
            }
        }
    }
    return {true, "50 instances, worst element difference " + harness::format_double(worst)};
}

// ---------------------------------------------------------------- criterion 3

Outcome partition_fidelity() {
    data::Dataset ds = data::generate_synthetic(10, 6000, 4, 2.0, 0xACCE0003);  // 60,000 samples

    data::PartitionPlan plan;
    plan.scheme = data::PartitionScheme::noniid_shards;
    plan.num_clients = 100;
    plan.shard_count = 200;
    plan.shard_size = 300;
    plan.shards_per_client = 2;
    plan.seed = 5;

    auto noniid = data::partition_noniid(ds, plan);
    if (noniid.size() != 100) return {false, "expected 100 noniid clients"};
    std::set<std::size_t> seen;
    for (const auto& c : noniid) {
        if (c.size() != 600) {
            return {false, "noniid client " + std::to_string(c.client_id) + " holds " +
                               std::to_string(c.size()) + " samples"};
        }
        std::set<int> labels;
        for (std::size_t idx : c.indices) {
            labels.insert(ds.labels[idx]);
            if (!seen.insert(idx).second) return {false, "overlapping noniid partitions"};
        }
        if (labels.size() > 2) {
            return {false, "noniid client " + std::to_string(c.client_id) + " spans " +
                               std::to_string(labels.size()) + " labels"};
        }
    }

    auto iid = data::partition_iid(ds, 100, 6);
    for (const auto& c : iid) {
        if (c.size() != 600) {
            return {false, "iid client " + std::to_string(c.client_id) + " holds " +
                               std::to_string(c.size()) + " samples"};
        }
    }
    return {true, "noniid: 600/client, <= 2 labels; iid: 600/client"};
}

// ---------------------------------------------------------------- criterion 4

Outcome scheduler_oracles() {
    // Proportional fairness vs exhaustive search over 1000 random draws.
    Rng rng(0xACCE0004);
    for (int rep = 0; rep < 1000; ++rep) {
        std::size_t k = 2 + rng.uniform_index(11);
        std::size_t n = 1 + rng.uniform_index(k);
        std::vector<double> inst(k), avg(k);
        for (std::size_t i = 0; i < k; ++i) {
            inst[i] = rng.uniform(0.01, 5.0);
            avg[i] = rng.uniform(0.1, 5.0);
        }
        auto got = sched::schedule_prop_fair(n, inst, avg, rep).selected;

        std::vector<std::size_t> best;
        double best_sum = -1e300;
        for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
            double sum = 0.0;
            std::vector<std::size_t> ids;
            for (std::size_t i = 0; i < k; ++i) {
                if (mask >> i & 1) {
                    sum += inst[i] / avg[i];
                    ids.push_back(i);
                }
            }
            if (sum > best_sum + 1e-12) {
                best_sum = sum;
                best = ids;
            }
        }
        if (got != best) return {false, "prop_fair mismatch at draw " + std::to_string(rep)};
    }

    // Cyclic coverage: every device exactly once per G consecutive rounds.
    for (std::size_t k = 1; k <= 20; ++k) {
        for (std::size_t g = 1; g <= k; ++g) {
            std::vector<int> count(k, 0);
            for (int t = 0; t < static_cast<int>(g); ++t) {
                for (std::size_t id : sched::schedule_cyclic(k, g, t).selected) ++count[id];
            }
            for (std::size_t id = 0; id < k; ++id) {
                if (count[id] != 1) {
                    return {false, "cyclic coverage broken at K=" + std::to_string(k) +
                                       " G=" + std::to_string(g)};
                }
            }
        }
    }

    // Random selection frequencies within 3 standard errors of n/K.
    const std::size_t k = 10, n = 3;
    const int draws = 100000;
    std::vector<int> hits(k, 0);
    for (int t = 0; t < draws; ++t) {
        for (std::size_t id : sched::schedule_random(k, n, 12, t).selected) ++hits[id];
    }
    const double p = 0.3;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    for (std::size_t id = 0; id < k; ++id) {
        double freq = static_cast<double>(hits[id]) / draws;
        if (std::abs(freq - p) > 3.0 * se) {
            return {false, "device " + std::to_string(id) + " frequency " +
                               harness::format_double(freq) + " outside 0.3 +/- " +
                               harness::format_double(3.0 * se)};
        }
    }
    return {true, "prop_fair = exhaustive (1000 draws), cyclic covers, random within 3 SE"};
}

// ---------------------------------------------------------------- criterion 5

Outcome channel_closed_form() {
    // 10 parameter points, success probabilities spread over (0.1, 0.9).
    struct Point {
        double power, beta, noise, distance, threshold;
    };
    const Point points[10] = {
        {1.0, 2.0, 1.0, 1.0, 0.3},  {1.0, 2.0, 1.0, 1.0, 0.8},  {2.0, 2.5, 0.8, 1.4, 0.7},
        {1.0, 3.0, 0.5, 1.2, 0.5},  {1.5, 2.0, 1.2, 1.1, 0.6},  {1.0, 2.0, 0.7, 1.3, 0.4},
        {2.5, 3.0, 1.0, 1.1, 0.9},  {1.0, 2.2, 0.9, 1.0, 1.2},  {3.0, 2.0, 1.5, 1.2, 0.5},
        {1.0, 2.8, 0.6, 1.25, 0.35},
    };
    const std::size_t trials = 100000;
    double worst_sigma = 0.0;
    for (int i = 0; i < 10; ++i) {
        wireless::ChannelConfig cfg;
        cfg.transmit_power = points[i].power;
        cfg.path_loss_exponent = points[i].beta;
        cfg.noise_variance = points[i].noise;
        cfg.snr_threshold = points[i].threshold;
        cfg.fading = wireless::Fading::rayleigh;
        wireless::DevicePlacement placement{0, points[i].distance, {}};

        double closed = std::exp(-cfg.snr_threshold * cfg.noise_variance *
                                 std::pow(placement.distance, cfg.path_loss_exponent) /
                                 cfg.transmit_power);
        double estimate = wireless::update_success_prob(
            cfg, placement, [](double, Rng&) { return true; }, trials,
            0xACCE0005 + static_cast<std::uint64_t>(i));
        double se = std::sqrt(closed * (1.0 - closed) / static_cast<double>(trials));
        double sigmas = std::abs(estimate - closed) / se;
        worst_sigma = std::max(worst_sigma, sigmas);
        if (sigmas > 3.0) {
            return {false, "point " + std::to_string(i) + ": estimate " +
                               harness::format_double(estimate) + " vs closed form " +
                               harness::format_double(closed) + " (" +
                               harness::format_double(sigmas) + " SE)"};
        }
    }
    return {true, "10 points x 100k trials, worst deviation " +
                      harness::format_double(worst_sigma) + " SE"};
}

// ---------------------------------------------------------------- criterion 6

Outcome ddpg_selection_quality() {
    auto profiles = toyenv::make_profiles();
    auto best = toyenv::exhaustive_optimum(profiles);
    int passing_seeds = 0;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto r = toyenv::train_and_evaluate(seed, 300, 16, 100);
        bool reward_ok = r.greedy_mean_reward >= best.reward * 1.10;  // within 10% (negative)
        bool pair_ok = r.optimal_episodes >= 80;
        if (reward_ok && pair_ok) ++passing_seeds;
        detail << " seed" << seed << "=" << harness::format_double(r.greedy_mean_reward) << "/"
               << r.optimal_episodes << "%";
    }
    bool pass = passing_seeds >= 4;
    return {pass, std::to_string(passing_seeds) + "/5 seeds pass (optimum " +
                      harness::format_double(best.reward) + ", 300 episodes):" + detail.str()};
}

// ---------------------------------------------------------------- criterion 7

std::string learning_config(const std::string& out_dir, std::size_t epochs,
                            const std::string& batch, std::size_t max_rounds,
                            double target_accuracy) {
    std::ostringstream cfg;
    cfg << "[experiment]\nseed = 2024\n"
        << "[dataset]\nsource = synthetic\nnum_classes = 10\nsamples_per_class = 600\n"
           "test_samples_per_class = 100\nfeature_dim = 20\nclass_separation = 5.0\n"
        << "[partition]\nscheme = iid\nnum_clients = 100\n"
        << "[model]\nhidden = 200,200\nactivation = relu\noutput_head = softmax_xent\n"
        << "[fl]\nclient_fraction = 0.1\nbatch_size = " << batch
        << "\nlocal_epochs = " << epochs << "\nlearning_rate = 0.1\nmax_rounds = " << max_rounds
        << "\ntarget_accuracy = " << target_accuracy << "\n"
        << "[channel]\ntransmit_power = 1.0\npath_loss_exponent = 2.0\nnoise_variance = 1e-9\n"
           "fading = none\nsubchannels = 10\nsnr_threshold = 1e-6\n"
        << "[scheduler]\nkind = random\n"
        << "[output]\ndirectory = " << out_dir << "\n";
    return cfg.str();
}

Outcome desk_scale_learning_curve() {
    harness::RunOptions options;
    options.config_text = learning_config((g_workdir / "curve").string(), 1, "10", 100, 0.0);
    auto cfg = harness::parse_config(options.config_text);
    auto result = harness::run(cfg, options);

    double best_acc = 0.0;
    int first_hit = -1;
    for (const auto& rec : result.records) {
        best_acc = std::max(best_acc, rec.test_acc);
        if (first_hit < 0 && rec.test_acc >= 0.95) first_hit = rec.round + 1;
    }
    if (first_hit < 0) {
        return {false, "accuracy only reached " + harness::format_double(best_acc) +
                           " in 100 rounds"};
    }

    // Smoothed loss: trailing mean over full 10-round windows must never rise.
    std::vector<double> losses;
    for (const auto& rec : result.records) losses.push_back(rec.test_loss);
    double prev = 0.0;
    bool have_prev = false;
    for (std::size_t end = 10; end <= losses.size(); ++end) {
        double sum = 0.0;
        for (std::size_t i = end - 10; i < end; ++i) sum += losses[i];
        double smoothed = sum / 10.0;
        if (have_prev && smoothed > prev + 1e-12) {
            return {false, "smoothed loss rises at round " + std::to_string(end - 1)};
        }
        prev = smoothed;
        have_prev = true;
    }

    std::string detail = "0.95 reached at round " + std::to_string(first_hit) +
                         ", smoothed loss monotone over 100 rounds";

    // Optional MNIST leg, gated on the IDX files being supplied.
    if (const char* mnist_dir = std::getenv("FEDSIM_MNIST_DIR")) {
        std::ostringstream cfg_text;
        cfg_text << "[experiment]\nseed = 2024\n"
                 << "[dataset]\nsource = idx\nimages = " << mnist_dir
                 << "/train-images-idx3-ubyte\nlabels = " << mnist_dir
                 << "/train-labels-idx1-ubyte\ntest_images = " << mnist_dir
                 << "/t10k-images-idx3-ubyte\ntest_labels = " << mnist_dir
                 << "/t10k-labels-idx1-ubyte\n"
                 << "[partition]\nscheme = iid\nnum_clients = 100\n"
                 << "[model]\nhidden = 200,200\nactivation = relu\noutput_head = softmax_xent\n"
                 << "[fl]\nclient_fraction = 0.1\nbatch_size = 10\nlocal_epochs = 1\n"
                    "learning_rate = 0.05\nmax_rounds = 300\ntarget_accuracy = 0.97\n"
                 << "[scheduler]\nkind = random\n"
                 << "[output]\ndirectory = " << (g_workdir / "mnist").string() << "\n";
        harness::RunOptions mnist_options;
        mnist_options.config_text = cfg_text.str();
        auto mnist_cfg = harness::parse_config(mnist_options.config_text);
        auto mnist_result = harness::run(mnist_cfg, mnist_options);
        bool reached = mnist_result.rounds_to_target > 0;
        detail += "; MNIST: ";
        detail += reached ? "0.97 at round " + std::to_string(mnist_result.rounds_to_target)
                          : "target missed (final " +
                                harness::format_double(mnist_result.final_accuracy) + ")";
        if (!reached) return {false, detail};
    } else {
        detail += "; MNIST leg skipped (FEDSIM_MNIST_DIR not set)";
    }
    return {true, detail};
}

// ---------------------------------------------------------------- criterion 8

Outcome sweep_ordering() {
    harness::RunOptions options;
    options.config_text = learning_config((g_workdir / "sweep_base").string(), 1, "10", 400, 0.0);
    auto cfg = harness::parse_config(options.config_text);
    options.output_override = (g_workdir / "sweep").string();
    auto result = harness::sweep(cfg, "EB", {"5:10", "1:10", "1:inf"}, 0.95, options);

    auto shown = [&](std::size_t i) {
        return result.rows[i].rounds_to_target < 0
                   ? std::string("-")
                   : std::to_string(result.rows[i].rounds_to_target);
    };
    auto rounds = [&](std::size_t i) {
        return result.rows[i].rounds_to_target < 0 ? (1 << 30) : result.rows[i].rounds_to_target;
    };
    std::string detail = "rounds-to-0.95: (E=5,B=10)=" + shown(0) + ", (E=1,B=10)=" + shown(1) +
                         ", (E=1,B=inf)=" + shown(2);
    if (result.rows[0].rounds_to_target < 0 || result.rows[1].rounds_to_target < 0) {
        return {false, detail + " (faster settings missed the target)"};
    }
    bool ordered = rounds(0) <= rounds(1) && rounds(1) <= rounds(2);
    return {ordered, detail};
}

// ---------------------------------------------------------------- criterion 9

Outcome determinism() {
    // Short reruns of the criterion-7 shape plus a ddpg-scheduled run; the
    // metrics files must match byte for byte.
    harness::RunOptions options;
    options.config_text = learning_config((g_workdir / "det_a").string(), 1, "10", 12, 0.0);
    auto cfg = harness::parse_config(options.config_text);
    harness::run(cfg, options);
    harness::RunOptions options_b = options;
    options_b.output_override = (g_workdir / "det_b").string();
    harness::run(cfg, options_b);

    if (read_file((g_workdir / "det_a" / "metrics.csv").string()) !=
        read_file((g_workdir / "det_b" / "metrics.csv").string())) {
        return {false, "random-scheduler run differs between executions"};
    }

    std::ostringstream ddpg_cfg;
    ddpg_cfg << "[experiment]\nseed = 77\n"
             << "[dataset]\nsource = synthetic\nnum_classes = 4\nsamples_per_class = 50\n"
                "test_samples_per_class = 10\nfeature_dim = 8\nclass_separation = 4.0\n"
             << "[partition]\nscheme = iid\nnum_clients = 10\n"
             << "[model]\nhidden = 16\n"
             << "[fl]\nclient_fraction = 0.3\nbatch_size = inf\nlocal_epochs = 1\n"
                "learning_rate = 0.2\nmax_rounds = 8\n"
             << "[channel]\nfading = rayleigh\nsnr_threshold = 1e-6\nnoise_variance = 1e-9\n"
             << "[scheduler]\nkind = ddpg\n"
             << "[agent]\nhidden = 16\nbatch_size = 8\nepisodes = 2\n"
             << "[output]\ndirectory = " << (g_workdir / "det_ddpg_a").string() << "\n";
    harness::RunOptions ddpg_options;
    ddpg_options.config_text = ddpg_cfg.str();
    auto ddpg_parsed = harness::parse_config(ddpg_options.config_text);
    harness::run(ddpg_parsed, ddpg_options);
    harness::RunOptions ddpg_b = ddpg_options;
    ddpg_b.output_override = (g_workdir / "det_ddpg_b").string();
    harness::run(ddpg_parsed, ddpg_b);

    if (read_file((g_workdir / "det_ddpg_a" / "metrics.csv").string()) !=
        read_file((g_workdir / "det_ddpg_b" / "metrics.csv").string())) {
        return {false, "ddpg-scheduler run differs between executions"};
    }
    return {true, "random- and ddpg-scheduled reruns byte-identical"};
}

}  // namespace

int main() {
    g_workdir = fs::temp_directory_path() / "fedsim_acceptance";
    fs::remove_all(g_workdir);
    fs::create_directories(g_workdir);

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
    };
    const Criterion criteria[] = {
        {1, "gradient correctness vs central finite differences", gradient_correctness},
        {2, "FedSGD/FedAvg aggregation equivalence", fedsgd_equivalence},
        {3, "partition fidelity at MNIST scale", partition_fidelity},
        {4, "scheduler oracles (prop-fair, cyclic, random)", scheduler_oracles},
        {5, "channel success probability closed form", channel_closed_form},
        {6, "ddpg selection quality on the toy environment", ddpg_selection_quality},
        {7, "desk-scale learning curve", desk_scale_learning_curve},
        {8, "sweep ordering across (E,B)", sweep_ordering},
        {9, "byte-identical reruns", determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id
                  << ": " << criterion.name << " - " << outcome.detail << " ("
                  << harness::format_double(seconds) << "s)" << std::endl;
        if (!outcome.pass) ++failures;
    }

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
