#include "amc/eval.hpp"
#include "amc/sigsynth.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace amc;

namespace {

Dataset tiny_dataset(int per_class, int len, std::uint64_t seed) {
  ChannelConfig cc;
  return synthesize_dataset(per_class, len, default_schemes(), cc, seed);
}

}  // namespace

TEST_CASE("split sizes follow the 70/15/15 fractions") {
  Dataset ds = tiny_dataset(100, 32, 1);  // 400 frames
  SplitIndex si = split(ds, {}, 1);
  CHECK(si.train.size() == 280);
  CHECK(si.val.size() == 60);
  CHECK(si.test.size() == 60);

  // disjoint and covering
  std::set<int> all(si.train.begin(), si.train.end());
  all.insert(si.val.begin(), si.val.end());
  all.insert(si.test.begin(), si.test.end());
  CHECK(all.size() == ds.size());

  // stratified: per-class test counts equal
  std::array<int, 4> counts{};
  for (int i : si.test) counts[ds.labels[i]]++;
  for (int c = 0; c < 4; ++c) CHECK(counts[c] == 15);
}

TEST_CASE("split determinism and guards") {
  Dataset ds = tiny_dataset(10, 32, 2);
  SplitIndex a = split(ds, {}, 42);
  SplitIndex b = split(ds, {}, 42);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  SplitIndex c = split(ds, {}, 43);
  CHECK(a.train != c.train);

  SplitFractions degenerate{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(split(ds, degenerate, 1), UsageError);

  Dataset small = tiny_dataset(2, 32, 3);
  CHECK_THROWS_AS(split(small, {}, 1), DataError);
}

TEST_CASE("evaluate: perfect and constant predictors") {
  Dataset ds = tiny_dataset(10, 32, 4);

  // constant predictor: bias the output layer hard toward class 2
  Model constant = build_model(Arch::FCNN, Domain::Time, 32, 4, 1);
  for (auto& l : constant.net.layers)
    if (auto* d = std::get_if<DenseLayer<float>>(&l)) {
      d->W.setZero();
      d->b.setZero();
    }
  // the last dense layer feeds softmax
  for (auto it = constant.net.layers.rbegin(); it != constant.net.layers.rend();
       ++it)
    if (auto* d = std::get_if<DenseLayer<float>>(&*it)) {
      d->b[2] = 10.0f;
      break;
    }
  EvalReport r = evaluate(constant, ds);
  CHECK(r.accuracy == doctest::Approx(0.25));
  for (int c = 0; c < 4; ++c) {
    CHECK(r.confusion(c, 2) == 10);
    for (int p = 0; p < 4; ++p)
      if (p != 2) CHECK(r.confusion(c, p) == 0);
  }
  // row sums = per-class counts; accuracy = trace/total
  CHECK(r.confusion.sum() == static_cast<int>(ds.size()));
  CHECK(r.accuracy ==
        doctest::Approx(static_cast<double>(r.confusion.trace()) / ds.size()));

  Dataset freq = transform_dataset(ds);
  CHECK_THROWS_AS(evaluate(constant, freq), DataError);
}

TEST_CASE("transfer_experiment at zero budget reproduces clean accuracy") {
  Dataset ds = tiny_dataset(40, 32, 5);
  SplitIndex si = split(ds, {}, 5);
  Dataset freq = transform_dataset(ds);

  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 5;
  Model f = build_model(Arch::FCNN, Domain::Time, 32, 4, 5);
  Model g = build_model(Arch::FCNN, Domain::Freq, 32, 4, 5);
  train(f, ds, si.train, si.val, cfg);
  train(g, freq, si.train, si.val, cfg);

  Dataset test_t = subset(ds, si.test);
  AttackConfig atk;
  atk.power_budget = 0.0;
  TransferResult tr = transfer_experiment(f, g, test_t, atk);
  CHECK(tr.surrogate_report.accuracy ==
        doctest::Approx(evaluate(f, test_t).accuracy));
  Dataset test_f = transform_dataset(test_t);
  CHECK(tr.target_report.accuracy ==
        doctest::Approx(evaluate(g, test_f).accuracy));
  CHECK(tr.gap == doctest::Approx(tr.target_report.accuracy -
                                  tr.surrogate_report.accuracy));

  // protocol guards
  CHECK_THROWS_AS(transfer_experiment(g, g, test_t, atk), DataError);
  CHECK_THROWS_AS(transfer_experiment(f, f, test_t, atk), DataError);
  CHECK_THROWS_AS(transfer_experiment(f, g, test_f, atk), DataError);
}

TEST_CASE("budget_sweep: grid {0} equals clean evaluation, rows well formed") {
  Dataset ds = tiny_dataset(30, 32, 6);
  SplitIndex si = split(ds, {}, 6);
  Dataset freq = transform_dataset(ds);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 6;
  Model f = build_model(Arch::FCNN, Domain::Time, 32, 4, 6);
  Model g = build_model(Arch::CNN, Domain::Freq, 32, 4, 6);
  train(f, ds, si.train, si.val, cfg);
  train(g, freq, si.train, si.val, cfg);
  Dataset test_t = subset(ds, si.test);

  AttackConfig base;
  auto rows = budget_sweep(f, g, test_t, {0.0}, base);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].domain == "time");
  CHECK(rows[1].domain == "freq");
  CHECK(rows[0].accuracy == doctest::Approx(evaluate(f, test_t).accuracy));
  CHECK(rows[0].surrogate == "fcnn");
  CHECK(rows[1].target == "cnn");

  CHECK_THROWS_AS(budget_sweep(f, g, test_t, {}, base), UsageError);
  CHECK_THROWS_AS(budget_sweep(f, g, test_t, {0.02, 0.01}, base), UsageError);

  auto rows2 = budget_sweep(f, g, test_t, {0.0, 0.01, 0.02}, base);
  CHECK(rows2.size() == 6);
}
