#include "groupdir/training.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "groupdir/contrastive.hpp"
#include "groupdir/errors.hpp"
#include "groupdir/rng.hpp"
#include "groupdir/softlabel.hpp"
#include "test_helpers.hpp"

using namespace groupdir;

namespace {

bool params_equal(const ModelParams& a, const ModelParams& b) {
  const auto va = param_views(a);
  const auto vb = param_views(b);
  if (va.size() != vb.size()) return false;
  for (std::size_t t = 0; t < va.size(); ++t) {
    if (va[t].size() != vb[t].size()) return false;
    for (std::size_t i = 0; i < va[t].size(); ++i) {
      if (va[t][i] != vb[t][i]) return false;
    }
  }
  return true;
}

// Smooth low-dimensional regression task; labels uniform on [0, 10].
Dataset make_tiny_dataset(rng::Engine& eng, std::size_t n, std::size_t dim) {
  Dataset data;
  data.labels.resize(n);
  data.features = Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = rng::uniform(eng, 0.0, 10.0);
    data.labels[i] = y;
    for (std::size_t k = 0; k < dim; ++k) {
      data.features(i, k) = std::sin(0.7 * static_cast<double>(k + 1) * y / 10.0) +
                            0.05 * rng::normal(eng);
    }
  }
  return data;
}

TrainConfig tiny_config() {
  TrainConfig config;
  config.num_groups = 4;
  config.hidden_dims = {8};
  config.embed_dim = 4;
  config.batch_size = 16;
  config.epochs = 2;
  return config;
}

Batch make_batch(rng::Engine& eng, std::size_t b, std::size_t dim, int num_groups) {
  Batch batch;
  batch.x = testutil::random_matrix(eng, b, dim, -1.0, 1.0);
  batch.y.resize(b);
  batch.groups = testutil::random_groups(eng, b, num_groups);
  batch.weights.assign(b, 1.0);
  for (auto& y : batch.y) y = rng::uniform(eng, 0.0, 10.0);
  return batch;
}

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("criterion names round-trip") {
  CHECK(std::string(criterion_name(Criterion::kSoft)) == "soft");
  CHECK(std::string(criterion_name(Criterion::kCe)) == "ce");
  CHECK(std::string(criterion_name(Criterion::kLa)) == "la");
  CHECK(criterion_from_name("soft") == Criterion::kSoft);
  CHECK(criterion_from_name("ce") == Criterion::kCe);
  CHECK(criterion_from_name("la") == Criterion::kLa);
  CHECK_THROWS_AS(criterion_from_name("mse"), ConfigError);
}

TEST_CASE("validate rejects every out-of-domain field") {
  auto expect_throw = [](auto&& mutate) {
    TrainConfig config = tiny_config();
    mutate(config);
    CHECK_THROWS_AS(validate(config), ConfigError);
  };
  CHECK_NOTHROW(validate(tiny_config()));
  expect_throw([](TrainConfig& c) { c.lambda1 = -0.1; });
  expect_throw([](TrainConfig& c) { c.lambda2 = -1.0; });
  expect_throw([](TrainConfig& c) { c.temperature = 0.0; });
  expect_throw([](TrainConfig& c) { c.beta = 0.0; });
  expect_throw([](TrainConfig& c) { c.learning_rate = 0.0; });
  expect_throw([](TrainConfig& c) { c.epochs = -1; });
  expect_throw([](TrainConfig& c) { c.batch_size = 1; });
  expect_throw([](TrainConfig& c) { c.stage2_epochs = -1; });
  expect_throw([](TrainConfig& c) { c.num_groups = 1; });
  expect_throw([](TrainConfig& c) { c.hidden_dims = {8, 0}; });
  expect_throw([](TrainConfig& c) { c.embed_dim = 0; });
  expect_throw([](TrainConfig& c) { c.la_tau = -0.5; });
  expect_throw([](TrainConfig& c) { c.lds_kernel_radius = -1; });
  expect_throw([](TrainConfig& c) { c.lds_sigma = 0.0; });
  expect_throw([](TrainConfig& c) { c.lds_intra_bins = 0; });
  expect_throw([](TrainConfig& c) { c.adam.beta1 = 1.0; });
  expect_throw([](TrainConfig& c) { c.adam.beta2 = -0.1; });
  expect_throw([](TrainConfig& c) { c.adam.eps = 0.0; });
  expect_throw([](TrainConfig& c) { c.adam.weight_decay = -1e-4; });
}

TEST_CASE("multi_expert_mse matches the worked single-sample value") {
  const std::vector<double> preds = {1.0};
  const std::vector<double> targets = {3.0};
  const std::vector<int> groups = {0};
  const std::vector<double> weights = {1.0};
  const auto result = multi_expert_mse(preds, targets, groups, weights);
  CHECK(result.value == doctest::Approx(4.0).epsilon(1e-15));
  REQUIRE(result.grad_pred.size() == 1);
  CHECK(result.grad_pred[0] == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("multi_expert_mse averages weighted squared errors over the batch") {
  const std::vector<double> preds = {1.0, 2.0, -1.0};
  const std::vector<double> targets = {0.0, 4.0, -1.0};
  const std::vector<int> groups = {0, 1, 2};
  const std::vector<double> weights = {2.0, 0.5, 3.0};
  const auto result = multi_expert_mse(preds, targets, groups, weights);
  // (2*1 + 0.5*4 + 3*0) / 3
  CHECK(result.value == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(result.grad_pred[0] == doctest::Approx(2.0 * 2.0 * 1.0 / 3.0).epsilon(1e-15));
  CHECK(result.grad_pred[1] == doctest::Approx(2.0 * 0.5 * -2.0 / 3.0).epsilon(1e-15));
  CHECK(result.grad_pred[2] == doctest::Approx(0.0).epsilon(1e-15));

  // Central differences on each prediction.
  const double step = 1e-6;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto bumped = preds;
    bumped[i] += step;
    const double up = multi_expert_mse(bumped, targets, groups, weights).value;
    bumped[i] -= 2.0 * step;
    const double down = multi_expert_mse(bumped, targets, groups, weights).value;
    const double fd = (up - down) / (2.0 * step);
    CHECK(testutil::close_rel(result.grad_pred[i], fd, 1e-7, 1e-9));
  }
}

TEST_CASE("multi_expert_mse validates its spans") {
  const std::vector<double> preds = {1.0, 2.0};
  const std::vector<double> targets = {1.0, 2.0};
  const std::vector<int> groups = {0, 1};
  const std::vector<double> weights = {1.0, -1.0};
  CHECK_THROWS_AS(multi_expert_mse(preds, targets, groups, weights), DataError);
  const std::vector<double> short_targets = {1.0};
  const std::vector<double> ones = {1.0, 1.0};
  CHECK_THROWS_AS(multi_expert_mse(preds, short_targets, groups, ones), DataError);
  CHECK_THROWS_AS(multi_expert_mse({}, {}, {}, {}), DataError);
}

TEST_CASE("first Adam step moves each parameter by lr * g / (|g| + eps)") {
  TrainConfig config = tiny_config();
  config.learning_rate = 2e-3;
  config.adam.weight_decay = 0.0;

  auto params = init_params(1, 1, {}, 1, 1);
  auto grads = zeros_like(params);
  const auto p_views = param_views(params);
  const auto g_views = param_views(grads);
  std::vector<double> before;
  rng::Engine eng(71);
  for (const auto view : p_views) {
    for (auto& v : view) {
      v = rng::uniform(eng, -1.0, 1.0);
      before.push_back(v);
    }
  }
  std::vector<double> grad_values;
  for (const auto view : g_views) {
    for (auto& v : view) {
      v = rng::uniform(eng, -2.0, 2.0);
      grad_values.push_back(v);
    }
  }

  auto state = make_adam_state(params);
  adam_step(state, params, grads, config);
  CHECK(state.step == 1);

  std::size_t idx = 0;
  for (const auto view : p_views) {
    for (const auto v : view) {
      const double g = grad_values[idx];
      const double expected =
          before[idx] - config.learning_rate * g / (std::fabs(g) + config.adam.eps);
      CHECK(v == doctest::Approx(expected).epsilon(1e-14));
      ++idx;
    }
  }
}

TEST_CASE("weight decay couples into the gradient before the moments") {
  TrainConfig config = tiny_config();
  config.learning_rate = 1e-2;
  config.adam.weight_decay = 0.1;

  auto params = init_params(1, 1, {}, 1, 1);
  auto grads = zeros_like(params);
  param_views(params)[0][0] = 0.5;
  param_views(grads)[0][0] = 0.25;

  auto state = make_adam_state(params);
  adam_step(state, params, grads, config);

  const double g_eff = 0.25 + 0.1 * 0.5;
  const double expected =
      0.5 - config.learning_rate * g_eff / (std::fabs(g_eff) + config.adam.eps);
  CHECK(param_views(params)[0][0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("adam trajectory matches an independent reference over many steps") {
  TrainConfig config = tiny_config();
  config.learning_rate = 3e-3;
  config.adam.weight_decay = 1e-4;

  auto params = testutil::make_params(11, 2, {3}, 2, 2);
  auto state = make_adam_state(params);

  // Flat mirror of the parameters stepped by a from-scratch Adam.
  std::vector<double> mirror, m, v;
  for (const auto view : param_views(params)) {
    for (const auto value : view) mirror.push_back(value);
  }
  m.assign(mirror.size(), 0.0);
  v.assign(mirror.size(), 0.0);

  rng::Engine eng(73);
  for (int step = 1; step <= 10; ++step) {
    auto grads = zeros_like(params);
    std::vector<double> flat_grads;
    for (const auto view : param_views(grads)) {
      for (auto& value : view) {
        value = rng::uniform(eng, -1.0, 1.0);
        flat_grads.push_back(value);
      }
    }
    adam_step(state, params, grads, config);

    const double bc1 = 1.0 - std::pow(config.adam.beta1, step);
    const double bc2 = 1.0 - std::pow(config.adam.beta2, step);
    for (std::size_t i = 0; i < mirror.size(); ++i) {
      const double g = flat_grads[i] + config.adam.weight_decay * mirror[i];
      m[i] = config.adam.beta1 * m[i] + (1.0 - config.adam.beta1) * g;
      v[i] = config.adam.beta2 * v[i] + (1.0 - config.adam.beta2) * g * g;
      mirror[i] -=
          config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam.eps);
    }

    std::size_t idx = 0;
    for (const auto view : param_views(params)) {
      for (const auto value : view) {
        CHECK(value == doctest::Approx(mirror[idx]).epsilon(1e-12));
        ++idx;
      }
    }
  }
}

TEST_CASE("heads-only stepping leaves the encoder and its moments untouched") {
  TrainConfig config = tiny_config();
  auto params = testutil::make_params(17, 3, {5}, 4, 3);
  const auto snapshot = params;
  auto state = make_adam_state(params);

  auto grads = zeros_like(params);
  for (const auto view : param_views(grads)) {
    for (auto& v : view) v = 0.5;
  }
  adam_step(state, params, grads, config, /*heads_only=*/true);

  const std::size_t frozen = params.encoder.size() * 2;
  const auto p_views = param_views(params);
  const auto s_views = param_views(snapshot);
  const auto m_views = param_views(state.m);
  const auto v_views = param_views(state.v);
  for (std::size_t t = 0; t < p_views.size(); ++t) {
    bool tensor_equal = true;
    bool moments_zero = true;
    for (std::size_t i = 0; i < p_views[t].size(); ++i) {
      tensor_equal &= (p_views[t][i] == s_views[t][i]);
      moments_zero &= (m_views[t][i] == 0.0 && v_views[t][i] == 0.0);
    }
    if (t < frozen) {
      CHECK(tensor_equal);
      CHECK(moments_zero);
    } else {
      CHECK_FALSE(tensor_equal);
      CHECK_FALSE(moments_zero);
    }
  }
}

TEST_CASE("class_prior normalizes counts with a floor") {
  const auto prior = class_prior(GroupHistogram{3, 1});
  REQUIRE(prior.size() == 2);
  CHECK(prior[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(prior[1] == doctest::Approx(0.25).epsilon(1e-12));

  const auto floored = class_prior(GroupHistogram{0, 4});
  CHECK(floored[0] > 0.0);
  CHECK(floored[0] + floored[1] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(class_prior(GroupHistogram{}), DataError);
  CHECK_THROWS_AS(class_prior(GroupHistogram{0, 0}), DataError);
}

TEST_CASE("sample_lds_weights map bins back to samples") {
  const auto scheme = make_grouping(0.0, 10.0, 2);
  Dataset data;
  data.labels = {1.0, 1.5, 2.0, 9.0};
  data.features = Matrix(4, 1, 0.0);
  TrainConfig config = tiny_config();
  config.num_groups = 2;
  config.lds_kernel_radius = 0;  // identity smoothing
  config.lds_intra_bins = 1;

  // Counts [3, 1] invert to [1/3, 1]; mean 2/3 rescales to [0.5, 1.5].
  const auto weights = sample_lds_weights(data, scheme, config);
  REQUIRE(weights.size() == 4);
  CHECK(weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(weights[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(weights[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(weights[3] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("final_loss composes the three published terms") {
  rng::Engine eng(79);
  TrainConfig config = tiny_config();
  config.num_groups = 3;
  const auto params = testutil::make_params(7, 3, {5}, 4, 3);
  const auto batch = make_batch(eng, 6, 3, 3);

  for (const auto criterion : {Criterion::kSoft, Criterion::kCe, Criterion::kLa}) {
    config.criterion = criterion;
    const std::vector<double> prior = {0.5, 0.3, 0.2};
    const auto components = final_loss(params, batch, config, prior, nullptr);

    const Matrix z = encode(params, batch.x);
    const double grc = grc_eval(z, batch.groups, config.temperature, nullptr);

    std::vector<double> preds(batch.y.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      preds[i] = regress(params, z.row(i), batch.groups[i]);
    }
    const double mse =
        multi_expert_mse(preds, batch.y, batch.groups, batch.weights).value;

    const Matrix logits = classify(params, z);
    const auto codec = make_codec(config.num_groups, config.beta);
    double crit = 0.0;
    for (std::size_t i = 0; i < batch.y.size(); ++i) {
      switch (criterion) {
        case Criterion::kSoft:
          crit += soft_ce_loss(logits.row(i), soft_target(codec, batch.groups[i])).value;
          break;
        case Criterion::kCe:
          crit += hard_ce_loss(logits.row(i), batch.groups[i]).value;
          break;
        case Criterion::kLa:
          crit += la_ce_loss(logits.row(i), batch.groups[i], prior, config.la_tau).value;
          break;
      }
    }
    crit /= static_cast<double>(batch.y.size());

    CHECK(components.grc == doctest::Approx(grc).epsilon(1e-12));
    CHECK(components.mse == doctest::Approx(mse).epsilon(1e-12));
    CHECK(components.crit == doctest::Approx(crit).epsilon(1e-12));
    CHECK(components.total ==
          doctest::Approx(grc + config.lambda1 * mse + config.lambda2 * crit)
              .epsilon(1e-12));
  }
}

TEST_CASE("vanilla final_loss is the unscaled regression loss alone") {
  rng::Engine eng(83);
  TrainConfig config = tiny_config();
  config.vanilla = true;
  const auto params = testutil::make_params(7, 3, {5}, 4, 1);
  const auto batch = make_batch(eng, 5, 3, 3);

  const auto components = final_loss(params, batch, config, {}, nullptr);
  CHECK(components.grc == 0.0);
  CHECK(components.crit == 0.0);
  CHECK(components.total == doctest::Approx(components.mse).epsilon(1e-15));

  const Matrix z = encode(params, batch.x);
  std::vector<double> preds(batch.y.size());
  const std::vector<int> route(batch.y.size(), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds[i] = regress(params, z.row(i), 0);
  }
  const double mse = multi_expert_mse(preds, batch.y, route, batch.weights).value;
  CHECK(components.mse == doctest::Approx(mse).epsilon(1e-15));
}

TEST_CASE("stage-2 objective drops the contrastive term and keeps exact gradients") {
  rng::Engine eng(89);
  TrainConfig config = tiny_config();
  config.num_groups = 3;
  ModelParams params;
  Batch batch;
  for (std::uint64_t seed = 21;; ++seed) {
    params = testutil::make_params(seed, 3, {5}, 4, 3);
    batch = make_batch(eng, 4, 3, 3);
    if (testutil::min_abs_hidden_preact(params, batch.x) > 1e-4) break;
    REQUIRE(seed < 200);
  }

  ModelParams grads = zeros_like(params);
  const auto components = final_loss(params, batch, config, {}, &grads, /*stage2=*/true);
  CHECK(components.grc == 0.0);

  const auto objective = [&batch, &config](const ModelParams& p) {
    return final_loss(p, batch, config, {}, nullptr, /*stage2=*/true).total;
  };
  CHECK(testutil::max_fd_rel_err(objective, params, grads) <= 1e-5);
}

TEST_CASE("final_loss validates batch geometry") {
  TrainConfig config = tiny_config();
  config.num_groups = 3;
  const auto params = testutil::make_params(7, 3, {5}, 4, 3);
  Batch empty;
  empty.x = Matrix(0, 3);
  CHECK_THROWS_AS(final_loss(params, empty, config, {}, nullptr), DataError);

  rng::Engine eng(97);
  auto batch = make_batch(eng, 4, 3, 3);
  batch.y.pop_back();
  CHECK_THROWS_AS(final_loss(params, batch, config, {}, nullptr), DataError);
}

TEST_CASE("training runs deterministically and records every epoch") {
  rng::Engine eng(101);
  const auto train_set = make_tiny_dataset(eng, 64, 3);
  const auto val_set = make_tiny_dataset(eng, 32, 3);
  const auto scheme = make_grouping(0.0, 10.0, 4);
  TrainConfig config = tiny_config();
  // A narrow rectifier layer can zero out a whole row, which the contrastive
  // term rejects by contract; keep the hidden layer wide enough that no row
  // dies on this data.
  config.hidden_dims = {16};

  const auto first = train(config, scheme, train_set, val_set);
  REQUIRE(first.history.size() == 2);
  for (const auto& record : first.history) {
    CHECK(std::isfinite(record.l_final));
    CHECK(std::isfinite(record.val_mae_cls));
    CHECK(std::isfinite(record.val_mae_gt));
    CHECK(record.train_mae > 0.0);
  }
  CHECK(first.history[0].epoch == 1);
  CHECK(first.history[1].epoch == 2);

  const auto second = train(config, scheme, train_set, val_set);
  CHECK(params_equal(first.params, second.params));
  for (std::size_t e = 0; e < first.history.size(); ++e) {
    CHECK(first.history[e].l_final == second.history[e].l_final);
    CHECK(first.history[e].val_mae_gt == second.history[e].val_mae_gt);
  }

  TrainConfig reseeded = config;
  reseeded.seed = 2;
  const auto third = train(reseeded, scheme, train_set, val_set);
  CHECK_FALSE(params_equal(first.params, third.params));
}

TEST_CASE("zero epochs return the untouched initialization") {
  rng::Engine eng(103);
  const auto train_set = make_tiny_dataset(eng, 32, 3);
  const auto val_set = make_tiny_dataset(eng, 16, 3);
  const auto scheme = make_grouping(0.0, 10.0, 4);
  TrainConfig config = tiny_config();
  config.epochs = 0;

  const auto result = train(config, scheme, train_set, val_set);
  CHECK(result.history.empty());
  const auto fresh =
      init_params(config.seed, 3, config.hidden_dims, config.embed_dim, 4);
  CHECK(params_equal(result.params, fresh));
}

TEST_CASE("stage-2 epochs freeze the encoder") {
  rng::Engine eng(107);
  const auto train_set = make_tiny_dataset(eng, 48, 3);
  const auto val_set = make_tiny_dataset(eng, 16, 3);
  const auto scheme = make_grouping(0.0, 10.0, 4);
  TrainConfig config = tiny_config();
  config.epochs = 0;
  config.stage2_epochs = 2;

  const auto result = train(config, scheme, train_set, val_set);
  REQUIRE(result.history.size() == 2);
  const auto fresh =
      init_params(config.seed, 3, config.hidden_dims, config.embed_dim, 4);

  const auto r_views = param_views(result.params);
  const auto f_views = param_views(fresh);
  const std::size_t frozen = fresh.encoder.size() * 2;
  for (std::size_t t = 0; t < frozen; ++t) {
    for (std::size_t i = 0; i < r_views[t].size(); ++i) {
      CHECK(r_views[t][i] == f_views[t][i]);
    }
  }
  bool heads_changed = false;
  for (std::size_t t = frozen; t < r_views.size(); ++t) {
    for (std::size_t i = 0; i < r_views[t].size(); ++i) {
      heads_changed |= (r_views[t][i] != f_views[t][i]);
    }
  }
  CHECK(heads_changed);
}

TEST_CASE("vanilla training mirrors gt metrics onto the cls column") {
  rng::Engine eng(109);
  const auto train_set = make_tiny_dataset(eng, 48, 3);
  const auto val_set = make_tiny_dataset(eng, 16, 3);
  const auto scheme = make_grouping(0.0, 10.0, 4);
  TrainConfig config = tiny_config();
  config.vanilla = true;

  const auto result = train(config, scheme, train_set, val_set);
  CHECK(result.params.num_groups() == 1);
  for (const auto& record : result.history) {
    CHECK(record.val_mae_gt == record.val_mae_cls);
    CHECK(record.l_grc == 0.0);
    CHECK(record.l_soft == 0.0);
  }
}

TEST_CASE("train rejects inconsistent inputs") {
  rng::Engine eng(113);
  const auto train_set = make_tiny_dataset(eng, 32, 3);
  const auto val_set = make_tiny_dataset(eng, 16, 3);
  const TrainConfig config = tiny_config();

  CHECK_THROWS_AS(train(config, make_grouping(0.0, 10.0, 5), train_set, val_set),
                  ConfigError);

  Dataset empty;
  CHECK_THROWS_AS(train(config, make_grouping(0.0, 10.0, 4), empty, val_set), DataError);

  auto narrow = val_set;
  narrow.features = Matrix(val_set.size(), 2, 0.1);
  CHECK_THROWS_AS(train(config, make_grouping(0.0, 10.0, 4), train_set, narrow),
                  DataError);
}

TEST_CASE("classification-guided prediction routes through the argmax expert") {
  rng::Engine eng(127);
  const auto params = testutil::make_params(31, 3, {5}, 4, 3);
  const Matrix x = testutil::random_matrix(eng, 5, 3);
  const auto predictions = predict_batch(params, x);
  REQUIRE(predictions.size() == 5);

  const Matrix z = encode(params, x);
  const Matrix logits = classify(params, z);
  for (std::size_t r = 0; r < 5; ++r) {
    int best = 0;
    for (int j = 1; j < 3; ++j) {
      if (logits(r, static_cast<std::size_t>(j)) >
          logits(r, static_cast<std::size_t>(best))) {
        best = j;
      }
    }
    CHECK(predictions[r].group == best);
    CHECK(predictions[r].value ==
          doctest::Approx(regress(params, z.row(r), best)).epsilon(1e-15));
  }

  const auto single = predict(params, x.row(2));
  CHECK(single.group == predictions[2].group);
  CHECK(single.value == doctest::Approx(predictions[2].value).epsilon(1e-15));

  const std::vector<int> gt = {2, 0, 1, 2, 0};
  const auto guided = predict_gt_guided_batch(params, x, gt);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(guided[r] == doctest::Approx(regress(params, z.row(r), gt[r])).epsilon(1e-15));
  }
  CHECK(predict_gt_guided(params, x.row(1), 0) ==
        doctest::Approx(guided[1]).epsilon(1e-15));

  const std::vector<int> short_groups = {0};
  CHECK_THROWS_AS(predict_gt_guided_batch(params, x, short_groups), DataError);
}

TEST_CASE("argmax routing breaks ties toward the lowest index") {
  ModelParams params;
  DenseLayer enc;
  enc.weight = Matrix(2, 2);
  enc.weight(0, 0) = 1.0;
  enc.weight(1, 1) = 1.0;
  enc.bias = {0.0, 0.0};
  params.encoder = {enc};
  // All-zero classifier: every logit ties at 0.
  params.classifier.weight = Matrix(3, 2, 0.0);
  params.classifier.bias = {0.0, 0.0, 0.0};
  DenseLayer expert;
  expert.weight = Matrix(1, 2, 0.0);
  expert.bias = {0.0};
  params.experts = {expert, expert, expert};
  params.experts[0].bias = {42.0};

  const std::vector<double> x = {0.3, -0.7};
  const auto prediction = predict(params, x);
  CHECK(prediction.group == 0);
  CHECK(prediction.value == doctest::Approx(42.0).epsilon(1e-15));
}

TEST_CASE("history CSV round-trips bit-exactly and rejects malformed text") {
  TrainHistory history;
  rng::Engine eng(131);
  for (int e = 1; e <= 5; ++e) {
    EpochRecord record;
    record.epoch = e;
    record.l_grc = rng::uniform(eng, 0.0, 2.0);
    record.l_mse = rng::uniform(eng, 0.0, 50.0);
    record.l_soft = rng::uniform(eng, 0.0, 3.0);
    record.l_final = record.l_grc + record.l_mse + record.l_soft;
    record.train_mae = rng::uniform(eng, 0.0, 10.0);
    record.val_mae_cls = rng::uniform(eng, 0.0, 10.0);
    record.val_mae_gt = rng::uniform(eng, 0.0, 10.0);
    history.push_back(record);
  }

  const auto text = history_to_csv(history);
  const auto parsed = history_from_csv(text);
  REQUIRE(parsed.size() == history.size());
  for (std::size_t e = 0; e < history.size(); ++e) {
    CHECK(parsed[e].epoch == history[e].epoch);
    CHECK(parsed[e].l_grc == history[e].l_grc);
    CHECK(parsed[e].l_mse == history[e].l_mse);
    CHECK(parsed[e].l_soft == history[e].l_soft);
    CHECK(parsed[e].l_final == history[e].l_final);
    CHECK(parsed[e].train_mae == history[e].train_mae);
    CHECK(parsed[e].val_mae_cls == history[e].val_mae_cls);
    CHECK(parsed[e].val_mae_gt == history[e].val_mae_gt);
  }

  CHECK_THROWS_AS(history_from_csv(""), IoError);
  CHECK_THROWS_AS(history_from_csv("epoch,l_grc\n"), IoError);

  const std::string header = text.substr(0, text.find('\n') + 1);
  const std::string good_row = "1,0,1,0,1,2,3,4\n";
  CHECK_THROWS_WITH_AS(history_from_csv(header + good_row + "2,0,1\n").size(),
                       "malformed-history: line 3", IoError);
  CHECK_THROWS_AS(history_from_csv(header + "1,0,1,0,1,2,3,4,9\n"), IoError);
  CHECK_THROWS_AS(history_from_csv(header + "x,0,1,0,1,2,3,4\n"), IoError);
}

TEST_SUITE_END();
