#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/nn/losses.hpp"
#include "fedsim/nn/mlp.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;
using namespace fedsim::nn;

namespace {

MlpSpec make_spec(std::vector<std::size_t> sizes, Activation act, OutputHead head) {
    MlpSpec spec;
    spec.layer_sizes = std::move(sizes);
    spec.activation = act;
    spec.output_head = head;
    return spec;
}

// Independent loss evaluation through the forward path only, for the
// finite-difference oracle.
double batch_loss(const MlpSpec& spec, const ParamVector& params, const Batch& batch) {
    double sum = 0.0;
    for (std::size_t s = 0; s < batch.count; ++s) {
        auto out = forward(spec, params,
                           batch.features.subspan(s * batch.feature_dim, batch.feature_dim));
        sum += head_loss(spec, out, batch, s);
    }
    return sum / static_cast<double>(batch.count);
}

GradVector finite_difference_grad(const MlpSpec& spec, const ParamVector& params,
                                  const Batch& batch, double eps) {
    GradVector fd{params.layout};
    ParamVector probe = params;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        probe.values[i] = params.values[i] + eps;
        double up = batch_loss(spec, probe, batch);
        probe.values[i] = params.values[i] - eps;
        double down = batch_loss(spec, probe, batch);
        probe.values[i] = params.values[i];
        fd.values[i] = (up - down) / (2.0 * eps);
    }
    return fd;
}

bool grads_match(const GradVector& got, const GradVector& want, double rtol, double atol) {
    for (std::size_t i = 0; i < got.values.size(); ++i) {
        double a = got.values[i], b = want.values[i];
        if (std::abs(a - b) > atol + rtol * std::max(std::abs(a), std::abs(b))) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("forward: zero weights annihilate the input") {
    auto spec = make_spec({3, 4, 2}, Activation::relu, OutputHead::linear);
    ParamVector zeros{spec.layout()};
    std::vector<double> x{0.3, -1.0, 2.5};
    auto out = forward(spec, zeros, x);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("forward: 1-1 identity network passes the input through") {
    auto spec = make_spec({1, 1}, Activation::identity, OutputHead::linear);
    ParamVector params{spec.layout()};
    params.values = {1.0, 0.0};  // weight, bias
    std::vector<double> x{3.0};
    auto out = forward(spec, params, x);
    CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("forward: 2-2-1 relu network matches a hand-evaluated oracle") {
    auto spec = make_spec({2, 2, 1}, Activation::relu, OutputHead::linear);
    ParamVector params{spec.layout()};
    // layer 0: W = [[1,-2],[0.5,1]] (row = input unit), b = [0.25,-0.5]
    // layer 1: W = [[2],[-1]], b = [0.5]
    params.values = {1.0, -2.0, 0.5, 1.0, 0.25, -0.5, 2.0, -1.0, 0.5};
    std::vector<double> x{1.0, 2.0};

    // Oracle: two explicit matrix products evaluated right here.
    double h0 = std::max(0.0, x[0] * 1.0 + x[1] * 0.5 + 0.25);
    double h1 = std::max(0.0, x[0] * -2.0 + x[1] * 1.0 + -0.5);
    double expected = h0 * 2.0 + h1 * -1.0 + 0.5;
    CHECK(expected == doctest::Approx(5.0));  // frozen hand computation

    auto out = forward(spec, params, x);
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("forward: softmax head yields a probability vector") {
    auto spec = make_spec({4, 8, 5}, Activation::tanh, OutputHead::softmax_xent);
    auto params = init_params(spec, 7);
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(4);
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        auto out = forward(spec, params, x);
        double sum = 0.0;
        for (double p : out) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("forward: dimension mismatches raise layout errors") {
    auto spec = make_spec({3, 2}, Activation::relu, OutputHead::linear);
    auto params = init_params(spec, 1);
    std::vector<double> short_input{1.0, 2.0};
    CHECK_THROWS_AS(forward(spec, params, short_input), LayoutError);

    auto other = init_params(make_spec({4, 2}, Activation::relu, OutputHead::linear), 1);
    std::vector<double> x{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(forward(spec, other, x), LayoutError);
}

TEST_CASE("loss catalog: table rows at their fixed points") {
    std::vector<double> w{2.0, -1.0};
    std::vector<double> x{1.0, 0.5};
    double wx = 1.5;

    CHECK(linear_regression_loss(w, x, wx) == doctest::Approx(0.0));
    CHECK(linear_regression_loss(w, x, wx + 2.0) == doctest::Approx(2.0));

    // margin 0: ln(1+e^0) = ln 2
    std::vector<double> w0{0.0, 0.0};
    CHECK(logistic_loss(w0, x, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(logistic_loss(w, x, 1.0) > 0.0);

    std::vector<double> unit{1.0};
    std::vector<double> one{1.0};
    CHECK(smooth_svm_loss(unit, one, 1.0) == doctest::Approx(0.0));
    CHECK(smooth_svm_loss(w0, x, 1.0) == doctest::Approx(0.5));

    std::vector<std::vector<double>> centroids{{1.0, 0.5}};
    CHECK(kmeans_loss(centroids, x) == doctest::Approx(0.0));

    std::vector<double> pred{1.0, 2.0};
    std::vector<double> target{1.0, 2.0};
    CHECK(neural_network_loss(pred, target) == doctest::Approx(0.0));

    // dispatch goes through the same rows
    LossInput input;
    input.weights = w0;
    input.features = x;
    input.label = 1.0;
    CHECK(loss(LossKind::logistic_regression, input) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss catalog: labels outside {-1,+1} are rejected") {
    std::vector<double> w{1.0};
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(logistic_loss(w, x, 0.0), InputError);
    CHECK_THROWS_AS(smooth_svm_loss(w, x, 2.0), InputError);
}

TEST_CASE("backward: analytic derivative of the linear toy model") {
    // 0.5*(y - w x)^2 with w = 0, sample (x=1, y=2): dLoss/dw = -(y-wx)x = -2
    auto spec = make_spec({1, 1}, Activation::identity, OutputHead::linear);
    ParamVector params{spec.layout()};  // w = 0, b = 0
    std::vector<double> features{1.0};
    std::vector<double> targets{2.0};
    Batch batch{1, 1, features, {}, targets};

    auto result = backward(spec, params, batch);
    CHECK(result.grad.values[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(result.grad.values[1] == doctest::Approx(-2.0).epsilon(1e-12));  // bias path
    CHECK(result.mean_loss == doctest::Approx(2.0));
}

TEST_CASE("backward: gradient matches central finite differences on 100 random instances") {
    Rng rng(20240817);
    const Activation acts[] = {Activation::relu, Activation::sigmoid, Activation::tanh,
                               Activation::identity};
    int checked = 0;
    for (int inst = 0; inst < 100; ++inst) {
        std::size_t in_dim = 1 + rng.uniform_index(3);
        std::size_t hid = 1 + rng.uniform_index(4);
        std::size_t out_dim = 1 + rng.uniform_index(3);
        auto head = rng.uniform_index(2) == 0 ? OutputHead::softmax_xent : OutputHead::linear;
        auto spec = make_spec({in_dim, hid, out_dim}, acts[rng.uniform_index(4)], head);
        if (layout_size(spec.layout()) > 50) {
            --inst;
            continue;
        }
        auto params = init_params(spec, rng.next_u64());

        std::size_t count = 1 + rng.uniform_index(4);
        std::vector<double> features(count * in_dim);
        for (auto& v : features) v = rng.uniform(-1.0, 1.0);
        std::vector<int> labels(count);
        std::vector<double> targets(count * out_dim);
        for (auto& l : labels) l = static_cast<int>(rng.uniform_index(out_dim));
        for (auto& t : targets) t = rng.uniform(-1.0, 1.0);
        Batch batch{count, in_dim, features, labels, targets};

        auto got = backward(spec, params, batch);
        auto want = finite_difference_grad(spec, params, batch, 1e-5);
        CHECK(grads_match(got.grad, want, 1e-4, 1e-8));
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("backward: duplicated batch gives the same mean gradient") {
    auto spec = make_spec({2, 3, 2}, Activation::sigmoid, OutputHead::softmax_xent);
    auto params = init_params(spec, 3);
    std::vector<double> one{0.2, -0.4};
    std::vector<int> one_label{1};
    Batch single{1, 2, one, one_label, {}};

    std::vector<double> two{0.2, -0.4, 0.2, -0.4};
    std::vector<int> two_labels{1, 1};
    Batch doubled{2, 2, two, two_labels, {}};

    auto a = backward(spec, params, single);
    auto b = backward(spec, params, doubled);
    for (std::size_t i = 0; i < a.grad.values.size(); ++i) {
        CHECK(a.grad.values[i] == doctest::Approx(b.grad.values[i]).epsilon(1e-12));
    }
    CHECK(a.mean_loss == doctest::Approx(b.mean_loss));
}

TEST_CASE("backward: empty batch is an input error") {
    auto spec = make_spec({2, 2}, Activation::relu, OutputHead::linear);
    auto params = init_params(spec, 1);
    Batch empty{0, 2, {}, {}, {}};
    CHECK_THROWS_AS(backward(spec, params, empty), InputError);
}

TEST_CASE("backward/forward/sgd_step are pure") {
    auto spec = make_spec({3, 4, 2}, Activation::relu, OutputHead::softmax_xent);
    auto params = init_params(spec, 5);
    auto params_copy = params;
    std::vector<double> features{0.1, 0.2, 0.3};
    std::vector<int> labels{0};
    Batch batch{1, 3, features, labels, {}};

    auto out1 = forward(spec, params, features);
    auto g1 = backward(spec, params, batch);
    auto stepped1 = sgd_step(params, g1.grad, 0.1);
    auto out2 = forward(spec, params, features);
    auto g2 = backward(spec, params, batch);
    auto stepped2 = sgd_step(params, g2.grad, 0.1);

    CHECK(params.values == params_copy.values);
    CHECK(out1 == out2);
    CHECK(g1.grad.values == g2.grad.values);
    CHECK(stepped1.values == stepped2.values);
}

TEST_CASE("one small sgd step never increases the batch loss on smooth models") {
    Rng rng(99);
    for (int inst = 0; inst < 20; ++inst) {
        auto head = inst % 2 == 0 ? OutputHead::softmax_xent : OutputHead::linear;
        auto spec = make_spec({2, 4, 2},
                              inst % 2 == 0 ? Activation::tanh : Activation::sigmoid, head);
        auto params = init_params(spec, rng.next_u64());
        std::vector<double> features{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        std::vector<int> labels{0, 1};
        std::vector<double> targets{1.0, 0.0, 0.0, 1.0};
        Batch batch{2, 2, features, labels, targets};

        auto before = backward(spec, params, batch);
        auto stepped = sgd_step(params, before.grad, 1e-3);
        auto after = backward(spec, stepped, batch);
        CHECK(after.mean_loss <= before.mean_loss);
    }
}

TEST_CASE("sgd_step: fixed points and linearity") {
    auto spec = make_spec({1, 1}, Activation::identity, OutputHead::linear);
    ParamVector params{spec.layout()};
    params.values = {1.0, 1.0};

    GradVector zero{spec.layout()};
    CHECK(sgd_step(params, zero, 0.5).values == params.values);

    GradVector grad{spec.layout()};
    grad.values = {1.0, -1.0};
    auto stepped = sgd_step(params, grad, 0.5);
    CHECK(stepped.values[0] == doctest::Approx(0.5));
    CHECK(stepped.values[1] == doctest::Approx(1.5));

    auto twice = sgd_step(sgd_step(params, grad, 0.5), grad, 0.5);
    auto once = sgd_step(params, grad, 1.0);
    for (std::size_t i = 0; i < twice.values.size(); ++i) {
        CHECK(twice.values[i] == doctest::Approx(once.values[i]).epsilon(1e-15));
    }

    GradVector other{make_spec({2, 1}, Activation::identity, OutputHead::linear).layout()};
    CHECK_THROWS_AS(sgd_step(params, other, 0.1), LayoutError);
}

TEST_CASE("init_params: deterministic in the seed, biases zero") {
    auto spec = make_spec({4, 6, 3}, Activation::relu, OutputHead::softmax_xent);
    auto a = init_params(spec, 42);
    auto b = init_params(spec, 42);
    auto c = init_params(spec, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);

    // biases of layer 0 live right after the 4x6 weight block
    for (std::size_t i = 24; i < 30; ++i) CHECK(a.values[i] == 0.0);

    double bound = 1.0 / std::sqrt(4.0);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(std::abs(a.values[i]) <= bound);
    }
}

TEST_CASE("init_params: weight mean is statistically centered at zero") {
    // 10,000 draws from U(-a, a): SE of the mean is a/sqrt(3 n).
    auto spec = make_spec({100, 100}, Activation::identity, OutputHead::linear);
    auto params = init_params(spec, 2024);
    double bound = 1.0 / std::sqrt(100.0);
    double sum = 0.0;
    const std::size_t n = 100 * 100;
    for (std::size_t i = 0; i < n; ++i) sum += params.values[i];
    double mean = sum / static_cast<double>(n);
    double se = bound / std::sqrt(3.0 * static_cast<double>(n));
    CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("param vector: total length follows the layout") {
    auto spec = make_spec({784, 200, 200, 10}, Activation::relu, OutputHead::softmax_xent);
    CHECK(layout_size(spec.layout()) == 784 * 200 + 200 + 200 * 200 + 200 + 200 * 10 + 10);
}

TEST_CASE("param vector: serialization round-trips bit-exactly") {
    auto spec = make_spec({3, 5, 2}, Activation::relu, OutputHead::linear);
    auto params = init_params(spec, 77);
    params.values[0] = -0.0;
    params.values[1] = 1e-308;
    auto bytes = serialize(params);
    auto back = deserialize(bytes);
    CHECK(back.layout == params.layout);
    REQUIRE(back.values.size() == params.values.size());
    for (std::size_t i = 0; i < back.values.size(); ++i) {
        CHECK(std::memcmp(&back.values[i], &params.values[i], sizeof(double)) == 0);
    }

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(deserialize(truncated), ParseError);
}

TEST_CASE("param vector arithmetic rejects mismatched layouts") {
    ParamVector a{Layout{{2, 2}}};
    ParamVector b{Layout{{2, 3}}};
    CHECK_THROWS_AS(add(a, b), LayoutError);
}
